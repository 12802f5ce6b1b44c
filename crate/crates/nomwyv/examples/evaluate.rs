//! Evaluate a checked program under the fuel-annotated big-step semantics
//! and inspect the resulting heap. Fuel bounds the depth of evaluation, so
//! too little of it reports stuck instead of looping.
//!
//!     cargo run --example evaluate

use nomwyv::eval::{eval_fuel, heap_well_typed, EvalResult, Heap};
use nomwyv::normalize::CheckOptions;
use nomwyv::parser::{parse_program, ParseOptions, SourceFile};
use nomwyv::syntax::StoreEnv;
use nomwyv::typecheck::{build_contexts, check_program};

const PROGRAM: &str = r#"
name Unit { u => }
name Counter { c =>
  val zero: Unit
  def bump(u: Unit): Counter
}
let unit = new Unit { u => } in
let counter = new Counter { c =>
  val zero: Unit = unit
  def bump(u: Unit): Counter = new Counter { c2 =>
    val zero: Unit = u
    def bump(u2: Unit): Counter = c.bump(u2)
  }
} in
let once = counter.bump(unit) in
let twice = once.bump(unit) in
twice
"#;

fn main() {
    let src = SourceFile::new("counter.nwyv", PROGRAM);
    let parsed = parse_program(&src, &ParseOptions::default()).expect("parse");
    let checked = check_program(&parsed.program, CheckOptions::default())
        .expect("the counter program typechecks");
    println!("main : {}", checked.main_type);

    for fuel in [1, 2, 8] {
        let outcome =
            eval_fuel(Heap::new(), StoreEnv::new(), &parsed.program.main, fuel).expect("eval");
        match outcome.result {
            EvalResult::Stuck => println!("fuel {fuel:>2}: stuck"),
            EvalResult::Value(loc) => {
                let ty = outcome.store.get(loc).expect("typed location");
                println!(
                    "fuel {fuel:>2}: {loc} : {ty}   (heap holds {} objects)",
                    outcome.heap.len()
                );
                let (defs, subs) = build_contexts(&parsed.program).expect("contexts");
                let ok = heap_well_typed(
                    &defs,
                    &subs,
                    &outcome.store,
                    &outcome.heap,
                    CheckOptions::default(),
                );
                println!("         heap well-typed: {ok}");
            }
        }
    }
}
