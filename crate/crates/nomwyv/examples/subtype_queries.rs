//! Subtype queries with and without the expansion pre-pass. The declared
//! relation between the names always holds; relating a name to a refined
//! supertype needs expansion to unfold the name's own members first.
//!
//!     cargo run --example subtype_queries

use nomwyv::normalize::Ctx;
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::subtype::{check, is_subtype_traced};
use nomwyv::syntax::Type;
use nomwyv::typecheck::build_contexts;

const DECLS: &str = r#"
name Int { i => }
name List { this =>
  type T <= Top
}
name IntList { this =>
  type T = Int
}
subtype IntList <: List
let u = new Top { z => } in u
"#;

fn main() {
    let src = SourceFile::new("lists.nwyv", DECLS);
    let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
    let (defs, subs) = build_contexts(&parsed.program).expect("contexts");

    let int_list = Type::named("IntList");
    let list_of_int: Type = {
        use nomwyv::syntax::{BaseType, Bound, Refinement, RefinementMember};
        Type::refined(
            BaseType::named("List"),
            Refinement::new(vec![RefinementMember::new(
                "T",
                Bound::Eq,
                Type::named("Int"),
            )]),
        )
    };

    let ctx = Ctx::new(&defs, &subs);
    let with_expansion = check(&ctx, &int_list, &list_of_int);
    println!(
        "with expansion:    IntList <: List {{ type T = Int }} : {} ({} steps)",
        with_expansion.holds, with_expansion.trace.steps
    );

    let mut raw = ctx.clone();
    raw.options.expansion = false;
    let without = check(&raw, &int_list, &list_of_int);
    println!(
        "without expansion: IntList <: List {{ type T = Int }} : {} ({} steps)",
        without.holds, without.trace.steps
    );

    println!("\nthe raw derivation attempt, which gets stuck on the missing member:");
    let traced = is_subtype_traced(&ctx, &int_list, &list_of_int);
    print!("{}", traced.trace.render());
}
