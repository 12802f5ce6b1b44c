//! Run the full static pipeline on a program: parse, material/shape
//! separation, typechecking, and assert verification.
//!
//!     cargo run --example check_program

use nomwyv::parser::SourceFile;
use nomwyv::pipeline::{render_check_text, run_check, PipelineOptions};

const PROGRAM: &str = r#"
name Int { i => }
name Bool { b => }

@shape name Equatable { self =>
  type EqT >= Bot
  def equals(x: self.EqT): Bool
}

name Fruit { self =>
  type EqT = Fruit
  def equals(x: Fruit): Bool
}

subtype Fruit <: Equatable

name Set { self =>
  type ElemT <= Equatable { type EqT = self.ElemT }
  def insert(element: self.ElemT): Set { type ElemT = self.ElemT }
}

let yes = new Bool { b => } in
let apple: Fruit = new Fruit { self =>
  type EqT = Fruit
  def equals(x: Fruit): Bool = yes
} in
let fruit_set: Set { type ElemT = Fruit } = new Set { type ElemT = Fruit } { self =>
  type ElemT = Fruit
  def insert(element: self.ElemT): Set { type ElemT = self.ElemT } = self
} in
fruit_set.insert(apple)
"#;

fn main() {
    let src = SourceFile::new("set_of_fruit.nwyv", PROGRAM);
    let outcome = run_check(&src, &PipelineOptions::default());
    print!("{}", render_check_text(&outcome, &src.path, false));

    // A broken variant: inserting a Bool where the set holds Fruit.
    let broken = PROGRAM.replace("fruit_set.insert(apple)", "fruit_set.insert(yes)");
    let src = SourceFile::new("broken.nwyv", broken);
    let outcome = run_check(&src, &PipelineOptions::default());
    println!("--- and a deliberate mistake:");
    print!("{}", render_check_text(&outcome, &src.path, false));
    std::process::exit(0);
}
