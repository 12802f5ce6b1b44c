//! Generate separated programs and cross-check the subtype engine against
//! the bounded brute-force oracle.
//!
//!     cargo run --example fuzz_oracle

use nomwyv::oracle::{gen_program, run_fuzz, GenConfig};

fn main() {
    let cfg = GenConfig {
        seed: 42,
        ..GenConfig::default()
    };
    println!("one generated program (seed {}):\n", cfg.seed);
    println!("{}", gen_program(&cfg));

    println!("\nengine vs oracle over 500 queries:");
    let report = run_fuzz(42, 500);
    println!("{}", report.render());
}
