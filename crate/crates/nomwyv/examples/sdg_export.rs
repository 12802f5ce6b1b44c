//! Build the subtype dependency graph, print it in DOT form, and show how
//! the shape annotation keeps the one cycle harmless: demoting the shape
//! to a material turns the same graph into a separation error.
//!
//!     cargo run --example sdg_export

use nomwyv::graphs::{build_sdg, check_shape_validity, compute_measures};
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::typecheck::build_contexts;

const DECLS: &str = r#"
@shape name Equatable { self =>
  type EqT >= Bot
}
name Fruit { self =>
  type EqT = Fruit
}
subtype Fruit <: Equatable
name Set { self =>
  type ElemT <= Equatable { type EqT >= self.ElemT }
}
let u = new Top { z => } in u
"#;

fn main() {
    let src = SourceFile::new("example.nwyv", DECLS);
    let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
    let (defs, subs) = build_contexts(&parsed.program).expect("contexts");

    let sdg = build_sdg(&defs, &subs);
    println!("{}", nomwyv::graphs::sdg_to_dot(&sdg));

    let report = check_shape_validity(&sdg, &defs);
    println!("shape-valid: {}", report.is_separated());

    let measures = compute_measures(&defs, &subs, &sdg).expect("measures");
    for (name, energy) in &measures.e {
        println!("E({name}) = {energy}");
    }

    // Demote the shape and watch the same self-loop become an error.
    let demoted = DECLS.replace("@shape name Equatable", "name Equatable");
    let src = SourceFile::new("demoted.nwyv", demoted);
    let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
    let (defs, subs) = build_contexts(&parsed.program).expect("contexts");
    let report = check_shape_validity(&build_sdg(&defs, &subs), &defs);
    println!("\nafter demoting Equatable to a material:");
    for v in &report.violations {
        println!("  {}", v.message());
    }
}
