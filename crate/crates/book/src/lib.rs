//! The guide in `book/src`, one module per chapter, so `cargo test --doc`
//! runs every listing against the current library.
//!
//! mdbook can't test snippets that depend on an outside crate, so the
//! chapters get pulled in here instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/getting-started.md")]
pub mod getting_started {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../book/src/strategies.md")]
pub mod strategies {}
#[doc = include_str!("../../../book/src/bounds.md")]
pub mod bounds {}
#[doc = include_str!("../../../book/src/results.md")]
pub mod results {}
