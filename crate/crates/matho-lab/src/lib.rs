//! Matrix-valued model spaces and truncated Toeplitz and Hankel operators.
//!
//! The library builds model spaces `K_Theta` for Blaschke-Potapov products, represents
//! truncated Toeplitz (MATTO) and Hankel (MATHO) operators between them as matrices,
//! and checks their displacement characterizations, symbol recovery, symbol kernels and
//! the unitary transforms relating the two families. The `matho-lab` binary runs the
//! same checks from scenario files.

pub mod error;
pub mod inner;
pub mod laurent;
pub mod linalg;
pub mod model_space;
pub mod operators;
pub mod random;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod symmetry;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/laurent.md")]
    pub mod laurent {}
    #[doc = include_str!("../../../book/src/model-spaces.md")]
    pub mod model_spaces {}
    #[doc = include_str!("../../../book/src/operators.md")]
    pub mod operators {}
    #[doc = include_str!("../../../book/src/recovery.md")]
    pub mod recovery {}
    #[doc = include_str!("../../../book/src/symmetry.md")]
    pub mod symmetry {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
    #[doc = include_str!("../../../book/src/testing.md")]
    pub mod testing {}
}
