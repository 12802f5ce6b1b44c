//! Property tests for the structural invariants: substitution and merge
//! laws, print/parse round trips, the relationship between exposure and
//! upcasting, and evaluation's fuel discipline.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nomwyv::eval::{eval_big, eval_fuel, EvalResult, Heap};
use nomwyv::normalize::{expose, upcast, Ctx};
use nomwyv::oracle::{gen_program, gen_query_pool, GenConfig};
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::subtype::is_subtype;
use nomwyv::syntax::{
    merge_refinements, Bound, FreeVars, Path, Refinement, RefinementMember, StoreEnv, Subst, Type,
};
use nomwyv::typecheck::build_contexts;

fn small_type() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![
        Just(Type::Top),
        Just(Type::Bottom),
        "[A-C]".prop_map(Type::named),
        ("[a-c]", "[s-u]").prop_map(|(x, t)| Type::sel(Path::var(x), t)),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        (
            "[A-C]",
            prop::collection::vec(
                (
                    "[s-u]",
                    prop_oneof![Just(Bound::Le), Just(Bound::Ge), Just(Bound::Eq)],
                    inner,
                ),
                0..3,
            ),
        )
            .prop_map(|(name, raw_members)| {
                let mut members: Vec<RefinementMember> = Vec::new();
                for (label, bound, ty) in raw_members {
                    if members.iter().all(|m| m.label.as_str() != label) {
                        members.push(RefinementMember::new(label, bound, ty));
                    }
                }
                Type::refined(
                    nomwyv::syntax::BaseType::named(name),
                    Refinement::new(members),
                )
            })
    })
}

fn small_refinement() -> impl Strategy<Value = Refinement> {
    prop::collection::vec(
        (
            "[s-v]",
            prop_oneof![Just(Bound::Le), Just(Bound::Ge), Just(Bound::Eq)],
            small_type(),
        ),
        0..4,
    )
    .prop_map(|raw| {
        let mut members: Vec<RefinementMember> = Vec::new();
        for (label, bound, ty) in raw {
            if members.iter().all(|m| m.label.as_str() != label) {
                members.push(RefinementMember::new(label, bound, ty));
            }
        }
        Refinement::new(members)
    })
}

proptest! {
    #[test]
    fn substitution_is_identity_off_the_free_variables(ty in small_type(), x in "[x-z]") {
        let x = nomwyv::syntax::VarName::new(&x);
        prop_assume!(!ty.mentions_var(&x));
        prop_assert_eq!(ty.subst(&x, &Path::var("w")), ty);
    }

    #[test]
    fn substitution_removes_the_variable(ty in small_type(), x in "[a-c]") {
        let x = nomwyv::syntax::VarName::new(&x);
        let replaced = ty.subst(&x, &Path::var("fresh"));
        prop_assert!(!replaced.mentions_var(&x));
    }

    #[test]
    fn merge_is_right_absorbing(a in small_refinement(), b in small_refinement()) {
        let once = merge_refinements(&a, &b);
        let twice = merge_refinements(&once, &b);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn merge_right_members_always_win(a in small_refinement(), b in small_refinement()) {
        let merged = merge_refinements(&a, &b);
        for m in &b.members {
            prop_assert_eq!(merged.get(&m.label), Some(m));
        }
    }

    #[test]
    fn printed_types_reparse(ty in small_type()) {
        let printed = ty.to_string();
        let reparsed = nomwyv::parser::parse_type_str(&printed).unwrap();
        prop_assert_eq!(ty, reparsed);
    }

    #[test]
    fn parser_never_panics(text in "\\PC*") {
        let src = SourceFile::new("fuzz.nwyv", text);
        let _ = parse_program(&src, &ParseOptions::default());
    }
}

#[test]
fn generated_programs_round_trip_through_printing() {
    for seed in 0..200 {
        let cfg = GenConfig {
            seed,
            ..GenConfig::default()
        };
        let program = gen_program(&cfg);
        let printed = program.to_string();
        let src = SourceFile::new("printed.nwyv", printed.clone());
        let reparsed = parse_program(&src, &ParseOptions::default())
            .unwrap_or_else(|d| panic!("seed {seed}: reparse failed: {d:?}\n{printed}"));
        assert_eq!(program, reparsed.program, "seed {seed}");
    }
}

#[test]
fn corpus_programs_round_trip_through_printing() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let reserved_ok = ParseOptions {
        allow_reserved_names: true,
        ..ParseOptions::default()
    };
    for name in [
        "fruit_set.nwyv",
        "guarded_cycle.nwyv",
        "fruit_set_unguarded.nwyv",
        "int_list.nwyv",
        "cloneable.nwyv",
        "object_sets.nwyv",
        "loop.nwyv",
    ] {
        let src = SourceFile::read(&dir.join(name)).expect("corpus");
        let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
        // Desugared programs may carry generated `$` names, so the reparse
        // allows them.
        let printed = parsed.program.to_string();
        let reparsed = parse_program(
            &SourceFile::new("printed.nwyv", printed.clone()),
            &reserved_ok,
        )
        .unwrap_or_else(|d| panic!("{name}: reparse failed: {d:?}\n{printed}"));
        assert_eq!(parsed.program, reparsed.program, "{name}");
    }
}

#[test]
fn exposure_is_the_closure_of_upcasting() {
    for seed in 0..150 {
        let cfg = GenConfig {
            seed,
            ..GenConfig::default()
        };
        let program = gen_program(&cfg);
        let (defs, subs) = build_contexts(&program).expect("contexts");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (env, pool) = gen_query_pool(&defs, &subs, &mut rng);
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for ty in &pool {
            let mut iterated = ty.clone();
            for _ in 0..64 {
                let next = upcast(&ctx, &iterated);
                if next == iterated {
                    break;
                }
                iterated = next;
            }
            assert_eq!(
                iterated,
                expose(&ctx, ty),
                "seed {seed}: iterated upcast of {ty} differs from exposure"
            );
        }
    }
}

#[test]
fn upcast_is_semitransitive() {
    let mut checked = 0u64;
    for seed in 0..150 {
        let cfg = GenConfig {
            seed,
            ..GenConfig::default()
        };
        let program = gen_program(&cfg);
        let (defs, subs) = build_contexts(&program).expect("contexts");
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5151);
        let (env, pool) = gen_query_pool(&defs, &subs, &mut rng);
        let mut ctx = Ctx::new(&defs, &subs);
        ctx.vars = env;
        for lhs in &pool {
            for rhs in &pool {
                if !is_subtype(&ctx, lhs, rhs).holds {
                    continue;
                }
                let up = upcast(&ctx, rhs);
                if &up != rhs {
                    checked += 1;
                    assert!(
                        is_subtype(&ctx, lhs, &up).holds,
                        "seed {seed}: {lhs} <: {rhs} but not its upcast {up}"
                    );
                }
            }
        }
    }
    assert!(checked > 50, "only {checked} semitransitivity cases");
}

#[test]
fn fueled_evaluation_is_monotone_and_agrees_on_the_corpus() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    for name in [
        "fruit_set.nwyv",
        "guarded_cycle.nwyv",
        "int_list.nwyv",
        "cloneable.nwyv",
    ] {
        let src = SourceFile::read(&dir.join(name)).expect("corpus");
        let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
        let main = &parsed.program.main;
        let (big_heap, big_store, big_loc) =
            eval_big(Heap::new(), StoreEnv::new(), main).expect("big-step");
        let mut first_success = None;
        for fuel in 0..40u64 {
            let outcome = eval_fuel(Heap::new(), StoreEnv::new(), main, fuel).expect("fueled");
            match outcome.result {
                EvalResult::Stuck => {
                    assert!(
                        first_success.is_none(),
                        "{name}: success then stuck at {fuel}"
                    );
                }
                EvalResult::Value(loc) => {
                    if first_success.is_none() {
                        first_success = Some(fuel);
                    }
                    assert_eq!(loc, big_loc, "{name}");
                    assert_eq!(outcome.heap, big_heap, "{name}");
                    assert_eq!(outcome.store, big_store, "{name}");
                }
            }
        }
        assert!(
            first_success.is_some(),
            "{name}: never completed within fuel 40"
        );
    }
}

#[test]
fn typing_the_same_expression_twice_is_identical() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    for name in ["fruit_set.nwyv", "int_list.nwyv", "cloneable.nwyv"] {
        let src = SourceFile::read(&dir.join(name)).expect("corpus");
        let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
        let (defs, subs) = build_contexts(&parsed.program).expect("contexts");
        let mut ctx = Ctx::new(&defs, &subs);
        let t1 = nomwyv::typecheck::type_expr(&mut ctx, &parsed.program.main).expect("types");
        let t2 = nomwyv::typecheck::type_expr(&mut ctx, &parsed.program.main).expect("types");
        assert_eq!(t1, t2, "{name}");
    }
}
