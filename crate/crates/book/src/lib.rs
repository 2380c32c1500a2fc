//! The guide in `book/src`, one module per chapter, so that
//! `cargo test --doc -p iblab-book` runs every snippet.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/exact.md")]
pub mod exact {}
#[doc = include_str!("../../../book/src/manifold.md")]
pub mod manifold {}
#[doc = include_str!("../../../book/src/chain.md")]
pub mod chain {}
#[doc = include_str!("../../../book/src/sigreg.md")]
pub mod sigreg {}
#[doc = include_str!("../../../book/src/training.md")]
pub mod training {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
