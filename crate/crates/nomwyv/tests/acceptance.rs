//! Acceptance suite: every criterion the artifact must meet, one test per
//! criterion, each printing a pass line with its measurements. Run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nomwyv::eval::{eval_fuel, heap_well_typed, EvalResult, Heap};
use nomwyv::graphs::{
    build_sdg, check_shape_validity, check_syntactic_separation, sdg_to_dot, SdgNode, ViolationKind,
};
use nomwyv::normalize::{
    avoid, bound_join, bound_product, expose, expose1, expose_env, Ctx, NormalizeError,
};
use nomwyv::oracle::{
    enumerate_subtype, gen_chain, gen_program, gen_query_pool, judgment_expose,
    run_fuzz_with_depth, GenConfig,
};
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::pipeline::{
    run_check, run_program, CheckOutcome, PipelineOptions, RunOutcome, EXIT_ASSERT, EXIT_FUEL,
    EXIT_OK,
};
use nomwyv::subtype::{is_subtype, SubtypeOutcome};
use nomwyv::syntax::{Bound, FreeVars, Path, Program, StoreEnv, Type, VarName};
use nomwyv::typecheck::{build_contexts, TypeErrorKind};

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(name)
}

fn corpus(name: &str) -> SourceFile {
    SourceFile::read(&corpus_path(name)).expect("corpus file")
}

fn prelude_opts() -> PipelineOptions {
    PipelineOptions {
        prelude: Some(corpus_path("prelude.nwyv")),
        ..PipelineOptions::default()
    }
}

fn parse(src: &SourceFile) -> Program {
    parse_program(src, &ParseOptions::default())
        .expect("parse")
        .program
}

fn nomwyv_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nomwyv"))
}

#[test]
fn criterion_01_set_program_checks_end_to_end() {
    let start = Instant::now();
    let outcome = run_check(&corpus("fruit_set.nwyv"), &PipelineOptions::default());
    let CheckOutcome::Done { checked, asserts } = &outcome else {
        panic!("criterion 1: FAIL ({outcome:?})");
    };
    assert!(asserts.is_empty());
    assert_eq!(checked.main_type.to_string(), "Set { type ElemT = Fruit }");
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");

    // The command-line driver prints the type verbatim.
    let output = nomwyv_bin()
        .args(["check", corpus_path("fruit_set.nwyv").to_str().unwrap()])
        .output()
        .expect("run nomwyv");
    assert_eq!(output.status.code(), Some(EXIT_OK));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("main : Set { type ElemT = Fruit }"));
    println!("criterion 1: pass (main : Set {{ type ElemT = Fruit }} in {elapsed:?})");
}

#[test]
fn criterion_02_sdg_golden_edges_and_dot() {
    let program = parse(&corpus("guarded_cycle.nwyv"));
    let (defs, subs) = build_contexts(&program).unwrap();
    let sdg = build_sdg(&defs, &subs);

    let edge = |from: SdgNode, to: SdgNode, label: Vec<&str>| {
        sdg.edges.iter().any(|e| {
            e.from == from
                && e.to == to
                && e.label.iter().map(|b| b.to_string()).collect::<Vec<_>>() == label
        })
    };
    assert_eq!(sdg.edges.len(), 4, "exactly four edges");
    assert!(edge(
        SdgNode::Pseudo("Fruit".into(), "EqT".into()),
        SdgNode::Name("Fruit".into()),
        vec![],
    ));
    assert!(edge(
        SdgNode::Name("Equatable".into()),
        SdgNode::Name("Fruit".into()),
        vec![],
    ));
    assert!(edge(
        SdgNode::Pseudo("Set".into(), "ElemT".into()),
        SdgNode::Name("Equatable".into()),
        vec![],
    ));
    assert!(edge(
        SdgNode::Pseudo("Set".into(), "ElemT".into()),
        SdgNode::Pseudo("Set".into(), "ElemT".into()),
        vec!["Equatable"],
    ));

    let golden = "digraph sdg {\n\
\x20 \"Top\" [shape=box, style=rounded];\n\
\x20 \"Bot\" [shape=box, style=rounded];\n\
\x20 \"Equatable\" [shape=box, style=rounded];\n\
\x20 \"Equatable::EqT\" [shape=box];\n\
\x20 \"Fruit\" [shape=box, style=rounded];\n\
\x20 \"Fruit::EqT\" [shape=box];\n\
\x20 \"Set\" [shape=box, style=rounded];\n\
\x20 \"Set::ElemT\" [shape=box];\n\
\x20 \"Fruit::EqT\" -> \"Fruit\";\n\
\x20 \"Set::ElemT\" -> \"Equatable\";\n\
\x20 \"Set::ElemT\" -> \"Set::ElemT\" [label=\"Equatable\"];\n\
\x20 \"Equatable\" -> \"Fruit\";\n\
}\n";
    assert_eq!(sdg_to_dot(&sdg), golden, "byte-stable DOT output");
    assert_eq!(sdg_to_dot(&sdg), sdg_to_dot(&build_sdg(&defs, &subs)));
    println!("criterion 2: pass (4 golden edges, stable DOT)");
}

#[test]
fn criterion_03_shape_validity_sensitivity() {
    let start = Instant::now();

    let program = parse(&corpus("fruit_set.nwyv"));
    let (defs, subs) = build_contexts(&program).unwrap();
    assert!(check_syntactic_separation(&program, &defs, &subs).is_separated());
    assert!(check_shape_validity(&build_sdg(&defs, &subs), &defs).is_separated());

    let mutant = parse(&corpus("fruit_set_unguarded.nwyv"));
    let (defs, subs) = build_contexts(&mutant).unwrap();
    let report = check_shape_validity(&build_sdg(&defs, &subs), &defs);
    assert!(!report.is_separated());
    let v = &report.violations[0];
    assert_eq!(v.kind, ViolationKind::UnguardedCycle);
    assert!(v
        .cycle
        .as_ref()
        .unwrap()
        .contains(&SdgNode::Pseudo("Set".into(), "ElemT".into())));

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 3: pass (valid accepted, mutant cycle names Set::ElemT, {elapsed:?})");
}

#[test]
fn criterion_04_expansion_restores_the_assert() {
    let file = corpus_path("int_list.nwyv");
    let file = file.to_str().unwrap();

    let with_expansion = nomwyv_bin().args(["check", file]).output().expect("run");
    assert_eq!(with_expansion.status.code(), Some(EXIT_OK));

    let without = nomwyv_bin()
        .args(["check", file, "--no-expand"])
        .output()
        .expect("run");
    assert_eq!(without.status.code(), Some(EXIT_ASSERT));
    let stdout = String::from_utf8_lossy(&without.stdout);
    assert!(stdout.contains("FAILED"));
    println!("criterion 4: pass (assert: exit 0 by default, exit 5 under --no-expand)");
}

#[test]
fn criterion_05_expressiveness_corpus() {
    let outcome = run_check(&corpus("cloneable.nwyv"), &PipelineOptions::default());
    assert_eq!(outcome.exit_code(), EXIT_OK, "cloneable.nwyv: {outcome:?}");

    let opts = PipelineOptions {
        eval_fuel: Some(64),
        ..prelude_opts()
    };
    let outcome = run_program(&corpus("object_sets.nwyv"), &opts);
    let RunOutcome::Done { loc, ty, .. } = &outcome else {
        panic!("object_sets.nwyv: {outcome:?}");
    };
    assert_eq!(ty.to_string(), "ISet");
    println!(
        "criterion 5: pass (cloneable checks; object_sets evaluates to {loc} : {ty} at fuel 64)"
    );
}

#[test]
fn criterion_06_avoidance_fuel_exhaustion() {
    let start = Instant::now();
    let program = parse(&corpus("loop.nwyv"));
    let (defs, subs) = build_contexts(&program).unwrap();
    let mut ctx = Ctx::new(&defs, &subs);
    ctx.vars.push("x".into(), Type::named("Loop"));
    let err = avoid(
        &ctx,
        &Type::sel(Path::var("x"), "T"),
        &"x".into(),
        Bound::Le,
        16,
    )
    .expect_err("must exhaust fuel");
    assert_eq!(
        err,
        NormalizeError::FuelExhausted {
            var: "x".into(),
            fuel: 16
        }
    );

    // Through the pipeline the same failure surfaces as an avoidance error.
    let outcome = run_check(&corpus("loop.nwyv"), &PipelineOptions::default());
    let CheckOutcome::TypeFailed(errors) = &outcome else {
        panic!("loop.nwyv: {outcome:?}");
    };
    assert!(errors.iter().any(|e| e.kind == TypeErrorKind::AvoidFailure));

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 6: pass (fuel 16 exhausted, AvoidFailure reported, {elapsed:?})");
}

/// Generated context, environment, and closed/open type pool for one seed.
fn generated_ctx(seed: u64) -> Option<(Program, Vec<Type>, nomwyv::syntax::VarEnv)> {
    let cfg = GenConfig {
        seed,
        ..GenConfig::default()
    };
    let program = gen_program(&cfg);
    let (defs, subs) = build_contexts(&program).ok()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let (env, pool) = gen_query_pool(&defs, &subs, &mut rng);
    Some((program, pool, env))
}

#[test]
fn criterion_07_metatheory_property_suite() {
    let start = Instant::now();
    let cases_per_property = 1000u64;

    // Reflexivity on closed well-formed types.
    let mut reflexive = 0u64;
    let mut seed = 0u64;
    'reflexivity: loop {
        let (program, pool, _) = generated_ctx(seed).expect("generated");
        let (defs, subs) = build_contexts(&program).unwrap();
        let ctx = Ctx::new(&defs, &subs);
        for ty in pool.iter().filter(|t| t.free_vars().is_empty()) {
            assert!(is_subtype(&ctx, ty, ty).holds, "seed {seed}: {ty} <: {ty}");
            reflexive += 1;
            if reflexive >= cases_per_property {
                break 'reflexivity;
            }
        }
        seed += 1;
    }

    // Transitivity over constructed chains, filtered on the premises.
    let mut transitive_cases = 0u64;
    let mut non_vacuous = 0u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xface);
    let mut seed = 1000u64;
    while transitive_cases < cases_per_property {
        let (program, _, env) = generated_ctx(seed).expect("generated");
        let (defs, subs) = build_contexts(&program).unwrap();
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for _ in 0..10 {
            let Some((t1, t2, t3)) = gen_chain(&defs, &subs, &mut rng) else {
                continue;
            };
            transitive_cases += 1;
            if is_subtype(&ctx, &t1, &t2).holds && is_subtype(&ctx, &t2, &t3).holds {
                non_vacuous += 1;
                assert!(
                    is_subtype(&ctx, &t1, &t3).holds,
                    "seed {seed}: {t1} <: {t2} <: {t3} but not {t1} <: {t3}"
                );
            }
            if transitive_cases >= cases_per_property {
                break;
            }
        }
        seed += 1;
    }
    assert!(
        non_vacuous >= 200,
        "want a meaningful premise rate, got {non_vacuous}/{transitive_cases}"
    );

    // Bottom inversion: anything below bottom is below everything.
    let mut bottom_cases = 0u64;
    let mut bottom_non_vacuous = 0u64;
    let mut seed = 2000u64;
    while bottom_cases < cases_per_property {
        let (program, pool, env) = generated_ctx(seed).expect("generated");
        let (defs, subs) = build_contexts(&program).unwrap();
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for lhs in &pool {
            bottom_cases += 1;
            if is_subtype(&ctx, lhs, &Type::Bottom).holds {
                bottom_non_vacuous += 1;
                for rhs in pool.iter().take(4) {
                    assert!(
                        is_subtype(&ctx, lhs, rhs).holds,
                        "seed {seed}: {lhs} <: Bot but not {lhs} <: {rhs}"
                    );
                }
            }
            if bottom_cases >= cases_per_property {
                break;
            }
        }
        seed += 1;
    }
    assert!(bottom_non_vacuous > 0);

    // Exposure: deterministic, agrees with the declarative judgment, and
    // stays within the step bound.
    let mut exposure_cases = 0u64;
    let mut seed = 3000u64;
    while exposure_cases < cases_per_property {
        let (program, pool, env) = generated_ctx(seed).expect("generated");
        let (defs, subs) = build_contexts(&program).unwrap();
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        let pseudotypes: u64 = defs
            .iter()
            .map(|(_, d)| d.type_members().count() as u64)
            .sum();
        let mut exposed_ctx = ctx.clone();
        exposed_ctx.vars = expose_env(&ctx);
        for ty in &pool {
            exposure_cases += 1;
            let once = expose(&ctx, ty);
            let twice = expose(&ctx, ty);
            assert_eq!(once, twice, "seed {seed}: exposure must be deterministic");
            let declarative = judgment_expose(&ctx, ty);
            assert_eq!(
                once, declarative,
                "seed {seed}: {ty} disagrees with judgment"
            );
            let (algorithmic, steps) = expose1(&exposed_ctx, ty);
            assert_eq!(
                once, algorithmic,
                "seed {seed}: {ty} disagrees with expose1"
            );
            let bound = ctx.vars.len() as u64 * (pseudotypes + 1);
            assert!(
                steps <= bound,
                "seed {seed}: {ty} took {steps} unfoldings, bound {bound}"
            );
            if exposure_cases >= cases_per_property {
                break;
            }
        }
        seed += 1;
    }

    // Avoidance: results never mention the binding, and relate to the
    // input in the reported direction.
    let mut avoid_cases = 0u64;
    let mut avoid_successes = 0u64;
    let mut seed = 4000u64;
    while avoid_cases < cases_per_property {
        let (program, pool, env) = generated_ctx(seed).expect("generated");
        seed += 1;
        if env.is_empty() {
            continue;
        }
        let (defs, subs) = build_contexts(&program).unwrap();
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        let last: VarName = ctx.vars.iter().last().unwrap().0.clone();
        for ty in &pool {
            for want in [Bound::Le, Bound::Ge, Bound::Eq] {
                avoid_cases += 1;
                if let Ok(result) = avoid(&ctx, ty, &last, want, 16) {
                    avoid_successes += 1;
                    assert!(
                        !result.ty.mentions_var(&last),
                        "seed {seed}: avoid left `{last}` in {}",
                        result.ty
                    );
                    let up = is_subtype(&ctx, ty, &result.ty).holds;
                    let down = is_subtype(&ctx, &result.ty, ty).holds;
                    match result.achieved {
                        Bound::Le => assert!(up, "seed {seed}: {ty} !<: {}", result.ty),
                        Bound::Ge => assert!(down, "seed {seed}: {} !<: {ty}", result.ty),
                        Bound::Eq => {
                            assert!(
                                up && down,
                                "seed {seed}: {ty} not equivalent to {}",
                                result.ty
                            )
                        }
                    }
                }
                if avoid_cases >= cases_per_property {
                    break;
                }
            }
            if avoid_cases >= cases_per_property {
                break;
            }
        }
    }
    assert!(
        avoid_successes > 100,
        "only {avoid_successes} avoid successes"
    );

    // The bound tables, exhaustively.
    use Bound::*;
    let join_table = [
        (Eq, Eq, Some(Eq)),
        (Eq, Le, Some(Le)),
        (Eq, Ge, Some(Ge)),
        (Le, Eq, Some(Le)),
        (Ge, Eq, Some(Ge)),
        (Le, Le, Some(Le)),
        (Ge, Ge, Some(Ge)),
        (Le, Ge, None),
        (Ge, Le, None),
    ];
    for (a, b, want) in join_table {
        assert_eq!(bound_join(a, b).ok(), want, "join({a}, {b})");
    }
    let product_table = [
        (Eq, Eq, Eq),
        (Eq, Le, Eq),
        (Eq, Ge, Eq),
        (Le, Eq, Le),
        (Ge, Eq, Ge),
        (Le, Le, Le),
        (Ge, Ge, Le),
        (Le, Ge, Ge),
        (Ge, Le, Ge),
    ];
    for (a, b, want) in product_table {
        assert_eq!(bound_product(a, b), want, "product({a}, {b})");
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 7: pass (reflexivity {reflexive}, transitivity {transitive_cases} \
         ({non_vacuous} non-vacuous), bottom-inversion {bottom_cases} ({bottom_non_vacuous} \
         non-vacuous), exposure {exposure_cases}, avoidance {avoid_cases} \
         ({avoid_successes} successes), 9+9 bound cells, in {elapsed:?})"
    );
}

#[test]
fn criterion_08_termination_witness() {
    const CEILING: u64 = 1_000_000;
    let mut max_steps = 0u64;
    let mut queries = 0u64;

    // Every corpus program: query all pairs from its type pool.
    for name in [
        "fruit_set.nwyv",
        "guarded_cycle.nwyv",
        "int_list.nwyv",
        "cloneable.nwyv",
        "loop.nwyv",
    ] {
        let program = parse(&corpus(name));
        let (defs, subs) = build_contexts(&program).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (env, pool) = gen_query_pool(&defs, &subs, &mut rng);
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for lhs in &pool {
            for rhs in &pool {
                let SubtypeOutcome { trace, .. } = is_subtype(&ctx, lhs, rhs);
                queries += 1;
                max_steps = max_steps.max(trace.steps);
                assert!(
                    trace.steps < CEILING,
                    "{name}: {lhs} <: {rhs} took {}",
                    trace.steps
                );
            }
        }
    }

    // Plus a thousand fuzz queries.
    let report = run_fuzz_with_depth(88, 1000, 8);
    assert_eq!(report.cases, 1000);
    assert!(report.max_steps < CEILING);
    max_steps = max_steps.max(report.max_steps);
    queries += report.cases;

    println!(
        "criterion 8: pass ({queries} queries all terminated; max derivation steps {max_steps} < 10^6)"
    );
}

#[test]
fn criterion_09_oracle_agreement() {
    let report = run_fuzz_with_depth(0, 1000, 8);
    assert_eq!(report.cases, 1000);
    assert_eq!(
        report.disagreements,
        0,
        "oracle and engine must agree:\n{}",
        report.render()
    );
    assert!(
        report.unknown_rate() < 0.20,
        "unknown rate {:.1}% exceeds 20%",
        100.0 * report.unknown_rate()
    );
    println!(
        "criterion 9: pass (1000 queries, {} resolved, {} unknown ({:.1}%), 100% agreement)",
        report.resolved,
        report.unknown,
        100.0 * report.unknown_rate()
    );
}

#[test]
fn criterion_10_desk_scale_type_safety() {
    // Preservation side: every well-typed corpus program reaches a value
    // at fuel 128 and leaves a heap that re-checks against the store.
    let well_typed: [(&str, Option<&str>); 5] = [
        ("fruit_set.nwyv", None),
        ("guarded_cycle.nwyv", None),
        ("int_list.nwyv", None),
        ("cloneable.nwyv", None),
        ("object_sets.nwyv", Some("prelude.nwyv")),
    ];
    for (name, prelude) in well_typed {
        let opts = match prelude {
            Some(p) => PipelineOptions {
                prelude: Some(corpus_path(p)),
                ..PipelineOptions::default()
            },
            None => PipelineOptions::default(),
        };
        let outcome = run_check(&corpus(name), &opts);
        let CheckOutcome::Done { checked, .. } = outcome else {
            panic!("{name}: {outcome:?}");
        };
        let evaluated = eval_fuel(Heap::new(), StoreEnv::new(), &checked.program.main, 128)
            .unwrap_or_else(|e| panic!("{name}: internal evaluation error {e}"));
        let EvalResult::Value(loc) = evaluated.result else {
            panic!("{name}: stuck at fuel 128");
        };
        assert!(evaluated.store.get(loc).is_some());
        assert!(
            heap_well_typed(
                &checked.defs,
                &checked.subs,
                &evaluated.store,
                &evaluated.heap,
                nomwyv::normalize::CheckOptions::default(),
            ),
            "{name}: heap fails to re-check"
        );

        // Progress side: zero fuel is stuck, never a crash.
        let stuck = eval_fuel(Heap::new(), StoreEnv::new(), &checked.program.main, 0)
            .unwrap_or_else(|e| panic!("{name}: internal evaluation error {e}"));
        assert_eq!(stuck.result, EvalResult::Stuck);
    }

    // And the stuck case exits with the fuel code through the driver.
    let output = nomwyv_bin()
        .args([
            "run",
            corpus_path("fruit_set.nwyv").to_str().unwrap(),
            "--fuel",
            "0",
        ])
        .output()
        .expect("run nomwyv");
    assert_eq!(output.status.code(), Some(EXIT_FUEL));
    println!("criterion 10: pass (5 programs evaluate and re-check at fuel 128; fuel 0 is stuck, exit 4)");
}

#[test]
fn oracle_spot_checks_on_the_corpus() {
    // The bounded oracle agrees with the engine on the hand-written
    // declarations too.
    let program = parse(&corpus("fruit_set.nwyv"));
    let (defs, subs) = build_contexts(&program).unwrap();
    let ctx = Ctx::new(&defs, &subs);
    let fruit = Type::named("Fruit");
    let equatable = Type::named("Equatable");
    let set = Type::named("Set");
    for (lhs, rhs) in [
        (&fruit, &equatable),
        (&equatable, &fruit),
        (&fruit, &set),
        (&Type::Bottom, &fruit),
    ] {
        let engine = is_subtype(&ctx, lhs, rhs).holds;
        let verdict = enumerate_subtype(&ctx, lhs, rhs, 8);
        if let Some(oracle) = verdict.as_bool() {
            assert_eq!(engine, oracle, "{lhs} <: {rhs}");
        }
    }
}
