//! Synthesis and evaluation engine for tasks that mix rule-based logical
//! inference with integer arithmetic.
//!
//! A *world* is a set of ground facts (attribute assignments and directed
//! relations) plus implication rules whose attribute conclusions carry
//! numeric expressions. Worlds are built backward from a query so that a
//! machine-checkable derivation of the answer exists by construction
//! ([`synth`]), padded with irrelevant content ([`distraction`]), rendered
//! into templated English ([`nl`]), and scored step-by-step against the
//! gold derivation ([`eval`]).
//!
//! The crate is `no_std` + `alloc`: everything here is pure computation over
//! strings and integers, driven by an explicit RNG. File formats, the CLI,
//! and network clients live in the companion `lns-cli` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

#[cfg(feature = "fixtures")]
pub mod cases;
pub mod distraction;
pub mod engine;
pub mod eval;
pub mod gold;
pub mod lemma;
pub mod model;
pub mod nl;
pub mod seed;
pub mod synth;
pub mod vocab;

pub use model::{Atom, Binding, Conclusion, Expression, Fact, Query, Rule, Token, Value, VarId};
