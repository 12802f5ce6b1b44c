//! Avoidance rewrites a type so it stops mentioning a local binding by
//! unfolding path members through their bounds. A self-referential upper
//! bound never closes, so the unfolding is cut off by fuel.
//!
//!     cargo run --example avoidance_fuel

use nomwyv::normalize::{avoid, Ctx};
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::syntax::{Bound, Path, Type};
use nomwyv::typecheck::build_contexts;

const DECLS: &str = r#"
name Int { i => }
@shape name Comparable { self =>
  type T <= Top
  def compare(x: self.T): Int
}
name Loop { self =>
  type T <= Comparable { type T <= self.T }
}
name Plain { self =>
  type T <= Int
}
let u = new Top { z => } in u
"#;

fn main() {
    let src = SourceFile::new("loops.nwyv", DECLS);
    let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
    let (defs, subs) = build_contexts(&parsed.program).expect("contexts");

    let mut ctx = Ctx::new(&defs, &subs);
    ctx.vars.push("p".into(), Type::named("Plain"));
    ctx.vars.push("x".into(), Type::named("Loop"));

    // A harmless unfolding: p.T overapproximates to Int in one step.
    let result = avoid(
        &ctx,
        &Type::sel(Path::var("p"), "T"),
        &"p".into(),
        Bound::Le,
        16,
    )
    .expect("p.T avoids cleanly");
    println!(
        "avoid(p.T, p) = {} (direction {})",
        result.ty, result.achieved
    );

    // The self-referential bound: every unfolding of x.T mentions x again.
    for fuel in [4, 16] {
        match avoid(
            &ctx,
            &Type::sel(Path::var("x"), "T"),
            &"x".into(),
            Bound::Le,
            fuel,
        ) {
            Ok(r) => println!("avoid(x.T, x) with fuel {fuel}: {}", r.ty),
            Err(e) => println!("avoid(x.T, x) with fuel {fuel}: {e}"),
        }
    }
}
