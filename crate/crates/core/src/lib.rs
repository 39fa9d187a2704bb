//! Generalized q-scale functions for spectrally negative Lévy processes and
//! one-dimensional diffusions, with the exit identities built on them and
//! Monte Carlo oracles to check those identities.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod duality;
pub mod error;
pub mod exit;
pub mod laplace;
pub mod levy;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod report;
pub mod verify;

pub use error::{Result, ScaleError};

// The guide's snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/levy.md")]
    mod levy {}
    #[doc = include_str!("../../../book/src/diffusion.md")]
    mod diffusion {}
    #[doc = include_str!("../../../book/src/exit.md")]
    mod exit {}
    #[doc = include_str!("../../../book/src/monte_carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/duality.md")]
    mod duality {}
}
