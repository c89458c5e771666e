//! Exact eigenvalue counting for weighted Laplacians on potential sublevel
//! sets, the boundary (Schur complement) splitting of those counts, and
//! explicit bounds to compare them against.
//!
//! The guide in `book/` walks through each piece; its snippets run as
//! doctests of this crate.

pub mod a2r;
pub mod assemble;
pub mod bounds;
pub mod eigcount;
pub mod error;
pub mod model;
pub mod scenario;
pub mod schrodinger;
pub mod sparse;

pub use error::{Error, Result};

// Book chapters, compiled so their snippets stay in sync with the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/sublevel.md")]
    mod sublevel {}
    #[doc = include_str!("../../../book/src/splitting.md")]
    mod splitting {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/schrodinger.md")]
    mod schrodinger {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
