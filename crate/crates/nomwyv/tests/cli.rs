//! End-to-end tests of the `nomwyv` binary: subcommands, exit codes,
//! output formats, and determinism of rendered output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(name)
        .display()
        .to_string()
}

fn nomwyv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomwyv"))
        .args(args)
        .env("NOMWYV_COLOR", "never")
        .output()
        .expect("spawn nomwyv")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn check_reports_the_main_type() {
    let out = nomwyv(&["check", &corpus("fruit_set.nwyv")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "main : Set { type ElemT = Fruit }\n");
}

#[test]
fn exit_codes_cover_the_pipeline_stages() {
    // Parse error.
    let dir = tempdir();
    let bad = dir.join("bad.nwyv");
    std::fs::write(&bad, "name {").unwrap();
    assert_eq!(
        nomwyv(&["check", bad.to_str().unwrap()]).status.code(),
        Some(3)
    );

    // Separation violation preempts everything else.
    assert_eq!(
        nomwyv(&["check", &corpus("fruit_set_unguarded.nwyv")])
            .status
            .code(),
        Some(2)
    );

    // Type error.
    assert_eq!(
        nomwyv(&["check", &corpus("loop.nwyv")]).status.code(),
        Some(1)
    );

    // Assert failure.
    assert_eq!(
        nomwyv(&["check", &corpus("int_list.nwyv"), "--no-expand"])
            .status
            .code(),
        Some(5)
    );

    // Fuel exhaustion during run.
    assert_eq!(
        nomwyv(&["run", &corpus("fruit_set.nwyv"), "--fuel", "0"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn run_requires_a_fuel_decision() {
    let out = nomwyv(&["run", &corpus("fruit_set.nwyv")]);
    assert_ne!(out.status.code(), Some(0));
    let out = nomwyv(&["run", &corpus("fruit_set.nwyv"), "--no-fuel"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn run_prints_location_type_and_members() {
    let out = nomwyv(&[
        "run",
        &corpus("object_sets.nwyv"),
        "--fuel",
        "64",
        "--prelude",
        &corpus("prelude.nwyv"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains(" : ISet\n"), "{text}");
    assert!(
        text.contains("members: isEmpty, contains, insert, union"),
        "{text}"
    );
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    for args in [
        vec!["check", &corpus("fruit_set.nwyv")],
        vec!["check", &corpus("fruit_set_unguarded.nwyv")],
        vec!["graph", &corpus("guarded_cycle.nwyv"), "--kind", "sdg"],
        vec!["check", &corpus("int_list.nwyv"), "--format", "json"],
    ] {
        let owned: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let refs: Vec<&str> = owned.iter().map(|s| s.as_str()).collect();
        let a = nomwyv(&refs);
        let b = nomwyv(&refs);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn graph_emits_both_kinds_of_dot() {
    let sdg = nomwyv(&["graph", &corpus("guarded_cycle.nwyv"), "--kind", "sdg"]);
    assert_eq!(sdg.status.code(), Some(0));
    let text = stdout_of(&sdg);
    assert!(text.starts_with("digraph sdg {"));
    assert!(text.contains("\"Set::ElemT\" -> \"Set::ElemT\" [label=\"Equatable\"];"));

    let nominal = nomwyv(&["graph", &corpus("guarded_cycle.nwyv"), "--kind", "nominal"]);
    assert_eq!(nominal.status.code(), Some(0));
    let text = stdout_of(&nominal);
    assert!(text.starts_with("digraph nominal {"));
    assert!(text.contains("\"Fruit\" -> \"Equatable\";"));
}

#[test]
fn subtype_answers_queries() {
    let out = nomwyv(&[
        "subtype",
        &corpus("int_list.nwyv"),
        "--lhs",
        "IntList",
        "--rhs",
        "List { type T = Int }",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains(": true"));

    let out = nomwyv(&[
        "subtype",
        &corpus("int_list.nwyv"),
        "--lhs",
        "IntList",
        "--rhs",
        "List { type T = Int }",
        "--no-expand",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains(": false"));

    let explained = nomwyv(&[
        "subtype",
        &corpus("int_list.nwyv"),
        "--lhs",
        "IntList",
        "--rhs",
        "List",
        "--explain",
    ]);
    assert!(stdout_of(&explained).contains("energy:"));
}

#[test]
fn json_output_is_machine_readable() {
    let out = nomwyv(&["check", &corpus("int_list.nwyv"), "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    assert_eq!(value["status"], "ok");
    assert_eq!(value["main_type"], "IntList");
    assert_eq!(value["asserts"][0]["passed"], true);

    let out = nomwyv(&[
        "check",
        &corpus("fruit_set_unguarded.nwyv"),
        "--format",
        "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid json");
    assert_eq!(value["status"], "separation-error");
    assert_eq!(value["diagnostics"][0]["code"], "S0004");
}

#[test]
fn directory_check_reports_every_file() {
    let dir = tempdir();
    std::fs::write(dir.join("ok.nwyv"), "let u = new Top { z => } in u").unwrap();
    std::fs::write(dir.join("broken.nwyv"), "name {").unwrap();
    let out = nomwyv(&["check", dir.to_str().unwrap()]);
    // Worst exit code wins.
    assert_eq!(out.status.code(), Some(3));
    let text = stdout_of(&out);
    assert!(text.contains("ok.nwyv (exit 0)"));
    assert!(text.contains("broken.nwyv (exit 3)"));
}

#[test]
fn trace_flag_prints_failing_derivations() {
    let dir = tempdir();
    let file = dir.join("mismatch.nwyv");
    std::fs::write(
        &file,
        "name A { a => }\nname B { b => }\nlet x: B = new A { z => } in x",
    )
    .unwrap();
    let plain = nomwyv(&["check", file.to_str().unwrap()]);
    assert_eq!(plain.status.code(), Some(1));
    let plain_text = stdout_of(&plain);
    assert!(plain_text.contains("error[E0003]"), "{plain_text}");
    assert!(!plain_text.contains("S-NameUp"), "{plain_text}");

    let traced = nomwyv(&["check", file.to_str().unwrap(), "--trace"]);
    let text = stdout_of(&traced);
    assert!(
        text.contains("(no rule applies)") || text.contains("S-"),
        "expected a derivation attempt:\n{text}"
    );
}

#[test]
fn color_env_controls_ansi_codes() {
    let always = Command::new(env!("CARGO_BIN_EXE_nomwyv"))
        .args(["check", &corpus("loop.nwyv")])
        .env("NOMWYV_COLOR", "always")
        .output()
        .expect("spawn");
    assert!(stdout_of(&always).contains("\x1b[31merror\x1b[0m"));

    let never = nomwyv(&["check", &corpus("loop.nwyv")]);
    assert!(!stdout_of(&never).contains('\x1b'));
}

#[test]
fn fuzz_prints_agreement_statistics() {
    let out = nomwyv(&["fuzz", "--seed", "5", "--cases", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("cases: 100"));
    assert!(text.contains("disagreements: 0"));
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "nomwyv-cli-test-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
