//! The driver pipeline behind the `nomwyv` binary: parse, merge an
//! optional prelude, material/shape separation, typechecking, then assert
//! checking, evaluation, or graph export. Stages run in that fixed order;
//! a separation failure preempts any typechecking diagnostics.
//!
//! Everything here returns structured outcomes so the same paths are
//! drivable from tests and examples; rendering to text or JSON happens at
//! the edges.

use std::path::Path as FsPath;

use serde_json::json;

use crate::eval::{eval_fuel, EvalResult, Heap};
use crate::graphs::{
    build_nominal_graph, build_sdg, check_shape_validity, check_syntactic_separation,
    nominal_to_dot, sdg_to_dot, SeparationReport, Violation, ViolationKind,
};
use crate::normalize::{CheckOptions, Ctx};
use crate::oracle::{run_fuzz, FuzzReport};
use crate::parser::{
    parse_prelude, parse_program, parse_type_str, AssertDirective, ParseDiagnostic, ParseOptions,
    SourceFile,
};
use crate::subtype::{check, check_traced};
use crate::syntax::{LocId, Program, StoreEnv, TopDecl, Type};
use crate::typecheck::{check_program, CheckedProgram, TypeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TYPE_ERROR: i32 = 1;
pub const EXIT_SEPARATION: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_FUEL: i32 = 4;
pub const EXIT_ASSERT: i32 = 5;

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub expansion: bool,
    pub avoid_fuel: u32,
    pub eval_fuel: Option<u64>,
    pub trace: bool,
    pub prelude: Option<std::path::PathBuf>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            expansion: true,
            avoid_fuel: 16,
            eval_fuel: None,
            trace: false,
            prelude: None,
        }
    }
}

impl PipelineOptions {
    pub fn check_options(&self) -> CheckOptions {
        CheckOptions {
            expansion: self.expansion,
            avoid_fuel: self.avoid_fuel,
        }
    }
}

fn violation_code(kind: ViolationKind) -> &'static str {
    match kind {
        ViolationKind::ShapeInLowerBound => "S0001",
        ViolationKind::ShapeUpperNotShape => "S0002",
        ViolationKind::ShapeRefinedInRefinement => "S0003",
        ViolationKind::UnguardedCycle => "S0004",
    }
}

pub fn render_violation(v: &Violation, file: &str) -> String {
    format!(
        "{file}:{}:{}: error[{}]: {}",
        v.span.line,
        v.span.col,
        violation_code(v.kind),
        v.message()
    )
}

/// Result of one assert directive.
#[derive(Clone, Debug)]
pub struct AssertResult {
    pub directive: AssertDirective,
    pub holds: bool,
    pub passed: bool,
}

/// Outcome of the static pipeline on one source file.
#[derive(Debug)]
pub enum CheckOutcome {
    ParseFailed(Vec<ParseDiagnostic>),
    SeparationFailed(SeparationReport),
    TypeFailed(Vec<TypeError>),
    Done {
        checked: CheckedProgram,
        asserts: Vec<AssertResult>,
    },
}

impl CheckOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            CheckOutcome::ParseFailed(_) => EXIT_PARSE,
            CheckOutcome::SeparationFailed(_) => EXIT_SEPARATION,
            CheckOutcome::TypeFailed(_) => EXIT_TYPE_ERROR,
            CheckOutcome::Done { asserts, .. } => {
                if asserts.iter().all(|a| a.passed) {
                    EXIT_OK
                } else {
                    EXIT_ASSERT
                }
            }
        }
    }
}

fn load_prelude(opts: &PipelineOptions) -> Result<Vec<TopDecl>, Vec<ParseDiagnostic>> {
    let Some(path) = &opts.prelude else {
        return Ok(Vec::new());
    };
    let src = SourceFile::read(path).map_err(|e| {
        vec![ParseDiagnostic::error(
            crate::syntax::Span::default(),
            crate::parser::code::UNKNOWN_TOKEN,
            format!("cannot read prelude `{}`: {e}", path.display()),
        )]
    })?;
    parse_prelude(&src)
}

/// Prepend prelude declarations, dropping generated record types that both
/// sides declared identically.
fn merge_decls(prelude: Vec<TopDecl>, program: Program) -> Program {
    let mut decls = prelude;
    for decl in program.decls {
        let duplicate_generated = matches!(
            &decl,
            TopDecl::Name(n) if n.name.as_str().starts_with("Tup$")
                && decls.iter().any(|d| d == &decl)
        );
        if !duplicate_generated {
            decls.push(decl);
        }
    }
    Program {
        decls,
        main: program.main,
    }
}

/// Parse and merge, without any checking. Shared by every subcommand.
pub fn load_program(
    src: &SourceFile,
    opts: &PipelineOptions,
) -> Result<(Program, Vec<AssertDirective>), Vec<ParseDiagnostic>> {
    let prelude = load_prelude(opts)?;
    let parsed = parse_program(src, &ParseOptions::default())?;
    Ok((merge_decls(prelude, parsed.program), parsed.asserts))
}

/// The full static pipeline: parse, separation, typecheck, asserts.
pub fn run_check(src: &SourceFile, opts: &PipelineOptions) -> CheckOutcome {
    let (program, asserts) = match load_program(src, opts) {
        Ok(p) => p,
        Err(diags) => return CheckOutcome::ParseFailed(diags),
    };

    let contexts = crate::typecheck::build_contexts(&program);
    if let Ok((defs, subs)) = &contexts {
        let report = check_syntactic_separation(&program, defs, subs)
            .merge(check_shape_validity(&build_sdg(defs, subs), defs));
        if !report.is_separated() {
            return CheckOutcome::SeparationFailed(report);
        }
    }

    let checked = match check_program(&program, opts.check_options()) {
        Ok(c) => c,
        Err(errors) => return CheckOutcome::TypeFailed(errors),
    };

    let ctx = Ctx::new(&checked.defs, &checked.subs).with_options(opts.check_options());
    let asserts = asserts
        .into_iter()
        .map(|directive| {
            let holds = check(&ctx, &directive.lhs, &directive.rhs).holds;
            AssertResult {
                passed: holds == directive.expected,
                holds,
                directive,
            }
        })
        .collect();

    CheckOutcome::Done { checked, asserts }
}

/// Outcome of `run`: the static pipeline plus evaluation.
#[derive(Debug)]
pub enum RunOutcome {
    Static(CheckOutcome),
    Stuck {
        fuel: u64,
    },
    Done {
        loc: LocId,
        ty: Type,
        member_labels: Vec<String>,
        heap_size: usize,
    },
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunOutcome::Static(c) => c.exit_code(),
            RunOutcome::Stuck { .. } => EXIT_FUEL,
            RunOutcome::Done { .. } => EXIT_OK,
        }
    }
}

/// Check and then evaluate under the configured fuel (an absent fuel means
/// unbounded evaluation).
pub fn run_program(src: &SourceFile, opts: &PipelineOptions) -> RunOutcome {
    let outcome = run_check(src, opts);
    let CheckOutcome::Done { checked, asserts } = outcome else {
        return RunOutcome::Static(outcome);
    };
    if asserts.iter().any(|a| !a.passed) {
        return RunOutcome::Static(CheckOutcome::Done { checked, asserts });
    }

    let (store, heap, result) = match opts.eval_fuel {
        Some(fuel) => {
            match eval_fuel(Heap::new(), StoreEnv::new(), &checked.program.main, fuel) {
                Ok(out) => (out.store, out.heap, out.result),
                Err(e) => {
                    // Only reachable on ill-typed input; surface as a type
                    // error rather than a crash.
                    return RunOutcome::Static(CheckOutcome::TypeFailed(vec![TypeError::new(
                        crate::typecheck::TypeErrorKind::UnboundPath,
                        crate::syntax::Span::default(),
                        format!("internal evaluation error: {e}"),
                    )]));
                }
            }
        }
        None => match crate::eval::eval_big(Heap::new(), StoreEnv::new(), &checked.program.main) {
            Ok((heap, store, loc)) => (store, heap, EvalResult::Value(loc)),
            Err(e) => {
                return RunOutcome::Static(CheckOutcome::TypeFailed(vec![TypeError::new(
                    crate::typecheck::TypeErrorKind::UnboundPath,
                    crate::syntax::Span::default(),
                    format!("internal evaluation error: {e}"),
                )]));
            }
        },
    };

    match result {
        EvalResult::Stuck => RunOutcome::Stuck {
            fuel: opts.eval_fuel.unwrap_or(0),
        },
        EvalResult::Value(loc) => {
            let ty = store.get(loc).cloned().unwrap_or(Type::Top);
            let member_labels = heap
                .get(loc)
                .map(|e| e.member_labels().iter().map(|l| l.to_string()).collect())
                .unwrap_or_default();
            RunOutcome::Done {
                loc,
                ty,
                member_labels,
                heap_size: heap.len(),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphKind {
    Sdg,
    Nominal,
}

/// Emit a graph in DOT form. Works on any parseable program so the export
/// can be used to diagnose separation failures.
pub fn run_graph(
    src: &SourceFile,
    opts: &PipelineOptions,
    kind: GraphKind,
) -> Result<String, Vec<ParseDiagnostic>> {
    let (program, _) = load_program(src, opts)?;
    let (defs, subs) = crate::typecheck::build_contexts(&program).map_err(|errs| {
        errs.into_iter()
            .map(|e| ParseDiagnostic::error(e.span, crate::parser::code::DUPLICATE_TYPE, e.message))
            .collect::<Vec<_>>()
    })?;
    Ok(match kind {
        GraphKind::Sdg => sdg_to_dot(&build_sdg(&defs, &subs)),
        GraphKind::Nominal => nominal_to_dot(&build_nominal_graph(&defs, &subs)),
    })
}

/// Outcome of a one-off subtype query.
#[derive(Debug)]
pub enum SubtypeOutcomeReport {
    Static(CheckOutcome),
    BadQuery(Vec<ParseDiagnostic>),
    Answered {
        lhs: Type,
        rhs: Type,
        holds: bool,
        steps: u64,
        trace: Option<String>,
        energies: Option<(u64, u64)>,
    },
}

impl SubtypeOutcomeReport {
    pub fn exit_code(&self) -> i32 {
        match self {
            SubtypeOutcomeReport::Static(c) => c.exit_code(),
            SubtypeOutcomeReport::BadQuery(_) => EXIT_PARSE,
            SubtypeOutcomeReport::Answered { .. } => EXIT_OK,
        }
    }
}

/// Answer one subtype query against the declarations of a file. The file
/// must parse and pass separation; with `--explain`, the energies of both
/// sides are reported as diagnostics.
pub fn run_subtype(
    src: &SourceFile,
    opts: &PipelineOptions,
    lhs: &str,
    rhs: &str,
    explain: bool,
) -> SubtypeOutcomeReport {
    let (program, _) = match load_program(src, opts) {
        Ok(p) => p,
        Err(diags) => return SubtypeOutcomeReport::Static(CheckOutcome::ParseFailed(diags)),
    };
    let Ok((defs, subs)) = crate::typecheck::build_contexts(&program) else {
        return SubtypeOutcomeReport::Static(CheckOutcome::TypeFailed(
            crate::typecheck::build_contexts(&program).unwrap_err(),
        ));
    };
    let report = check_syntactic_separation(&program, &defs, &subs)
        .merge(check_shape_validity(&build_sdg(&defs, &subs), &defs));
    if !report.is_separated() {
        return SubtypeOutcomeReport::Static(CheckOutcome::SeparationFailed(report));
    }

    let lhs_ty = match parse_type_str(lhs) {
        Ok(t) => t,
        Err(d) => return SubtypeOutcomeReport::BadQuery(d),
    };
    let rhs_ty = match parse_type_str(rhs) {
        Ok(t) => t,
        Err(d) => return SubtypeOutcomeReport::BadQuery(d),
    };

    let ctx = Ctx::new(&defs, &subs).with_options(opts.check_options());
    let outcome = if opts.trace {
        check_traced(&ctx, &lhs_ty, &rhs_ty)
    } else {
        check(&ctx, &lhs_ty, &rhs_ty)
    };
    let trace = outcome.trace.tree.as_ref().map(|_| outcome.trace.render());
    let energies = if explain {
        let sdg = build_sdg(&defs, &subs);
        crate::graphs::compute_measures(&defs, &subs, &sdg)
            .ok()
            .and_then(|measures| {
                let l = crate::subtype::type_energy(&ctx, &measures, &lhs_ty).ok()?;
                let r = crate::subtype::type_energy(&ctx, &measures, &rhs_ty).ok()?;
                Some((l, r))
            })
    } else {
        None
    };
    SubtypeOutcomeReport::Answered {
        lhs: lhs_ty,
        rhs: rhs_ty,
        holds: outcome.holds,
        steps: outcome.trace.steps,
        trace,
        energies,
    }
}

/// Run the generator-vs-oracle fuzz loop.
pub fn run_fuzz_command(seed: u64, cases: u64) -> FuzzReport {
    run_fuzz(seed, cases)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

pub fn render_check_text(outcome: &CheckOutcome, file: &str, trace: bool) -> String {
    let mut out = String::new();
    match outcome {
        CheckOutcome::ParseFailed(diags) => {
            for d in diags {
                out.push_str(&d.render(file));
                out.push('\n');
            }
        }
        CheckOutcome::SeparationFailed(report) => {
            for v in &report.violations {
                out.push_str(&render_violation(v, file));
                out.push('\n');
            }
        }
        CheckOutcome::TypeFailed(errors) => {
            for e in errors {
                out.push_str(&e.render(file, trace));
                out.push('\n');
            }
        }
        CheckOutcome::Done { checked, asserts } => {
            out.push_str(&format!("main : {}\n", checked.main_type));
            for a in asserts {
                let op = if a.directive.expected { "<:" } else { "</:" };
                let verdict = if a.passed { "ok" } else { "FAILED" };
                out.push_str(&format!(
                    "assert {} {} {} ... {}\n",
                    a.directive.lhs, op, a.directive.rhs, verdict
                ));
            }
        }
    }
    out
}

pub fn render_check_json(outcome: &CheckOutcome, file: &str) -> serde_json::Value {
    let diag = |line: u32, col: u32, code: &str, message: &str| {
        json!({
            "file": file,
            "line": line,
            "col": col,
            "severity": "error",
            "code": code,
            "message": message,
        })
    };
    match outcome {
        CheckOutcome::ParseFailed(diags) => json!({
            "status": "parse-error",
            "exit": EXIT_PARSE,
            "diagnostics": diags
                .iter()
                .map(|d| diag(d.span.line, d.span.col, d.code, &d.message))
                .collect::<Vec<_>>(),
        }),
        CheckOutcome::SeparationFailed(report) => json!({
            "status": "separation-error",
            "exit": EXIT_SEPARATION,
            "diagnostics": report
                .violations
                .iter()
                .map(|v| diag(v.span.line, v.span.col, violation_code(v.kind), &v.message()))
                .collect::<Vec<_>>(),
        }),
        CheckOutcome::TypeFailed(errors) => json!({
            "status": "type-error",
            "exit": EXIT_TYPE_ERROR,
            "diagnostics": errors
                .iter()
                .map(|e| diag(e.span.line, e.span.col, e.kind.code(), &e.message))
                .collect::<Vec<_>>(),
        }),
        CheckOutcome::Done { checked, asserts } => json!({
            "status": if asserts.iter().all(|a| a.passed) { "ok" } else { "assert-failed" },
            "exit": outcome.exit_code(),
            "main_type": checked.main_type.to_string(),
            "asserts": asserts
                .iter()
                .map(|a| json!({
                    "lhs": a.directive.lhs.to_string(),
                    "rhs": a.directive.rhs.to_string(),
                    "expected": a.directive.expected,
                    "holds": a.holds,
                    "passed": a.passed,
                }))
                .collect::<Vec<_>>(),
        }),
    }
}

pub fn render_run_text(outcome: &RunOutcome, file: &str, trace: bool) -> String {
    match outcome {
        RunOutcome::Static(c) => render_check_text(c, file, trace),
        RunOutcome::Stuck { fuel } => format!("stuck: evaluation ran out of fuel ({fuel})\n"),
        RunOutcome::Done {
            loc,
            ty,
            member_labels,
            heap_size,
        } => format!(
            "{loc} : {ty}\nmembers: {}\nheap size: {heap_size}\n",
            member_labels.join(", ")
        ),
    }
}

pub fn render_run_json(outcome: &RunOutcome, file: &str) -> serde_json::Value {
    match outcome {
        RunOutcome::Static(c) => render_check_json(c, file),
        RunOutcome::Stuck { fuel } => json!({
            "status": "stuck",
            "exit": EXIT_FUEL,
            "fuel": fuel,
        }),
        RunOutcome::Done {
            loc,
            ty,
            member_labels,
            heap_size,
        } => json!({
            "status": "ok",
            "exit": EXIT_OK,
            "result": loc.to_string(),
            "type": ty.to_string(),
            "members": member_labels,
            "heap_size": heap_size,
        }),
    }
}

pub fn render_subtype_text(report: &SubtypeOutcomeReport, file: &str, trace: bool) -> String {
    match report {
        SubtypeOutcomeReport::Static(c) => render_check_text(c, file, trace),
        SubtypeOutcomeReport::BadQuery(diags) => diags
            .iter()
            .map(|d| d.render("<query>") + "\n")
            .collect::<String>(),
        SubtypeOutcomeReport::Answered {
            lhs,
            rhs,
            holds,
            steps,
            trace,
            energies,
        } => {
            let mut out = format!("{lhs} <: {rhs} : {holds} ({steps} steps)\n");
            if let Some((el, er)) = energies {
                out.push_str(&format!("energy: lhs = {el}, rhs = {er}\n"));
            }
            if let Some(t) = trace {
                out.push_str(t);
            }
            out
        }
    }
}

/// Check every `.nwyv` file under a directory, in parallel, reporting in
/// name order. The exit code is the worst per-file code.
pub fn run_check_dir(dir: &FsPath, opts: &PipelineOptions) -> (String, i32) {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|ext| ext == "nwyv"))
                .collect()
        })
        .unwrap_or_default();
    files.sort();

    let results: Vec<(String, i32, String)> = std::thread::scope(|scope| {
        let handles: Vec<_> = files
            .iter()
            .map(|path| {
                let opts = opts.clone();
                scope.spawn(move || {
                    let name = path.display().to_string();
                    match SourceFile::read(path) {
                        Ok(src) => {
                            let outcome = run_check(&src, &opts);
                            let text = render_check_text(&outcome, &name, opts.trace);
                            (name, outcome.exit_code(), text)
                        }
                        Err(e) => (name.clone(), EXIT_PARSE, format!("{name}: {e}\n")),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut out = String::new();
    let mut exit = EXIT_OK;
    for (name, code, text) in results {
        out.push_str(&format!("== {name} (exit {code})\n"));
        out.push_str(&text);
        exit = exit.max(code);
    }
    (out, exit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(name: &str) -> SourceFile {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("corpus")
            .join(name);
        SourceFile::read(&path).expect("corpus file")
    }

    fn with_prelude(mut opts: PipelineOptions) -> PipelineOptions {
        opts.prelude = Some(
            std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("corpus")
                .join("prelude.nwyv"),
        );
        opts
    }

    #[test]
    fn check_passes_on_the_set_program() {
        let outcome = run_check(&corpus("fruit_set.nwyv"), &PipelineOptions::default());
        assert_eq!(outcome.exit_code(), EXIT_OK);
        let CheckOutcome::Done { checked, .. } = outcome else {
            panic!("expected success");
        };
        assert_eq!(checked.main_type.to_string(), "Set { type ElemT = Fruit }");
    }

    #[test]
    fn separation_preempts_type_errors() {
        let outcome = run_check(
            &corpus("fruit_set_unguarded.nwyv"),
            &PipelineOptions::default(),
        );
        assert_eq!(outcome.exit_code(), EXIT_SEPARATION);
        let CheckOutcome::SeparationFailed(report) = outcome else {
            panic!("expected separation failure");
        };
        assert!(report
            .violations
            .iter()
            .any(|v| v.message().contains("Set::ElemT")));
    }

    #[test]
    fn separation_failures_block_the_subtype_engine() {
        // The program has both a separation violation and a type error;
        // only the separation violation may be reported.
        let src = SourceFile::new(
            "both.nwyv",
            "@shape name S { s => }\n\
             name A { a => type t >= S }\n\
             let u = a.missing(u) in u",
        );
        let outcome = run_check(&src, &PipelineOptions::default());
        assert!(matches!(outcome, CheckOutcome::SeparationFailed(_)));
        assert_eq!(outcome.exit_code(), EXIT_SEPARATION);
    }

    #[test]
    fn asserts_honor_the_expansion_flag() {
        let outcome = run_check(&corpus("int_list.nwyv"), &PipelineOptions::default());
        assert_eq!(outcome.exit_code(), EXIT_OK);

        let no_expand = PipelineOptions {
            expansion: false,
            ..PipelineOptions::default()
        };
        let outcome = run_check(&corpus("int_list.nwyv"), &no_expand);
        assert_eq!(outcome.exit_code(), EXIT_ASSERT);
    }

    #[test]
    fn the_loop_program_fails_with_avoidance() {
        let outcome = run_check(&corpus("loop.nwyv"), &PipelineOptions::default());
        assert_eq!(outcome.exit_code(), EXIT_TYPE_ERROR);
        let CheckOutcome::TypeFailed(errors) = outcome else {
            panic!("expected type errors");
        };
        assert!(errors
            .iter()
            .any(|e| e.kind == crate::typecheck::TypeErrorKind::AvoidFailure));
    }

    #[test]
    fn run_evaluates_the_set_listing_with_prelude() {
        let opts = PipelineOptions {
            eval_fuel: Some(64),
            ..with_prelude(PipelineOptions::default())
        };
        let outcome = run_program(&corpus("object_sets.nwyv"), &opts);
        assert_eq!(outcome.exit_code(), EXIT_OK, "{outcome:?}");
        let RunOutcome::Done { ty, .. } = outcome else {
            panic!("expected completion");
        };
        assert_eq!(ty.to_string(), "ISet");
    }

    #[test]
    fn zero_fuel_reports_stuck() {
        let opts = PipelineOptions {
            eval_fuel: Some(0),
            ..PipelineOptions::default()
        };
        let outcome = run_program(&corpus("fruit_set.nwyv"), &opts);
        assert_eq!(outcome.exit_code(), EXIT_FUEL);
    }

    #[test]
    fn graph_export_works_even_for_separation_failures() {
        let dot = run_graph(
            &corpus("fruit_set_unguarded.nwyv"),
            &PipelineOptions::default(),
            GraphKind::Sdg,
        )
        .expect("dot");
        assert!(dot.contains("Set::ElemT"));
    }

    #[test]
    fn subtype_queries_answer_both_ways() {
        let report = run_subtype(
            &corpus("int_list.nwyv"),
            &PipelineOptions::default(),
            "IntList",
            "List { type T = Int }",
            false,
        );
        assert!(matches!(
            report,
            SubtypeOutcomeReport::Answered { holds: true, .. }
        ));
        let no_expand = PipelineOptions {
            expansion: false,
            ..PipelineOptions::default()
        };
        let report = run_subtype(
            &corpus("int_list.nwyv"),
            &no_expand,
            "IntList",
            "List { type T = Int }",
            false,
        );
        assert!(matches!(
            report,
            SubtypeOutcomeReport::Answered { holds: false, .. }
        ));
    }

    #[test]
    fn json_rendering_is_stable() {
        let outcome = run_check(&corpus("int_list.nwyv"), &PipelineOptions::default());
        let a = render_check_json(&outcome, "int_list.nwyv").to_string();
        let outcome2 = run_check(&corpus("int_list.nwyv"), &PipelineOptions::default());
        let b = render_check_json(&outcome2, "int_list.nwyv").to_string();
        assert_eq!(a, b);
        assert!(a.contains("\"main_type\""));
    }
}
