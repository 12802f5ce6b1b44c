//! A typechecker and interpreter for a small nominal object calculus with
//! path-dependent types, decidable subtyping via material/shape separation,
//! and a fuel-annotated big-step semantics.
//!
//! The pipeline runs in a fixed order: parse, material/shape separation,
//! typechecking, then assertion checking or evaluation. Each stage is an
//! ordinary library module; the `pipeline` module wires them together the
//! way the `nomwyv` binary does, and the runnable examples under
//! `examples/` drive each major capability on its own.

pub mod eval;
pub mod graphs;
pub mod normalize;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod subtype;
pub mod syntax;
pub mod typecheck;
