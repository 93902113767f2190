//! P1 finite elements for a degenerate pseudoparabolic obstacle problem on
//! periodically perforated domains, its cell problems and its homogenized limit.
//! See the [`guide`] for a walkthrough.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod harness;
pub mod homogenize;
pub mod macroscale;
pub mod mesh;
pub mod micro;
pub mod model;

pub use error::{Error, Result};

/// The user guide from `book/`, compiled here so its snippets run as doc-tests.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/mesh.md")]
    pub mod mesh {}
    #[doc = include_str!("../../../book/src/model.md")]
    pub mod model {}
    #[doc = include_str!("../../../book/src/micro.md")]
    pub mod micro {}
    #[doc = include_str!("../../../book/src/homogenize.md")]
    pub mod homogenize {}
    #[doc = include_str!("../../../book/src/macro.md")]
    pub mod macroscale {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
