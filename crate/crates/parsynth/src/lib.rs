//! Learning LL parsers from (program, parse tree) pairs.
//!
//! The pieces fit together like this: a non-differentiable stack [`machine`]
//! executes SHIFT / CALL / RETURN / REDUCE / FINAL instructions to build a
//! [`tree::ParseTree`] from a token stream. A small recurrent
//! [`controller`] decides, from the stack top alone, which instruction to
//! execute next. The [`train`] module recovers instruction traces and fits
//! the controller from (input, tree) pairs only, using a two-phase
//! reinforcement-learning search over per-example candidate traces. The
//! [`enumerate`] module is the brute-force ground truth for how large those
//! search spaces actually are, and [`grammar`] ships three concrete
//! languages with deterministic reference parsers, random generators, and
//! curricula.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, or the thin `parsynth` binary for `gen` / `train` / `eval` /
//! `enum` commands.

pub mod config;
pub mod controller;
pub mod enumerate;
pub mod grammar;
pub mod machine;
pub mod nn;
pub mod report;
pub mod train;
pub mod tree;
pub mod vocab;

pub use machine::{Instruction, InstructionKind, MachineConfig, MachineState};
pub use tree::{diff, mindiff, ParseTree};
pub use vocab::{Label, Vocab};
