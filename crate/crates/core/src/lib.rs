//! Proof-of-work security simulator: a block tree with per-branch
//! difficulty, a round-based mining engine, attack strategies, the
//! countermeasures that defuse them, closed-form bounds and an experiment
//! harness.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod chain;
pub mod harness;
pub mod hash;
pub mod mining;
pub mod party;
pub mod pragthos;
pub mod strategies;
