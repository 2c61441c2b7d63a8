#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutoff;
pub mod error;
pub mod field;
pub mod fkmc;
mod fmt;
pub mod harness;
pub mod ldp;
pub mod potential;
pub mod rng;
pub mod specfun;
pub mod varcalc;

pub use error::{Error, Result};

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    pub mod special_functions {}
    #[doc = include_str!("../../../book/src/fields.md")]
    pub mod fields {}
    #[doc = include_str!("../../../book/src/potential.md")]
    pub mod potential {}
    #[doc = include_str!("../../../book/src/variational.md")]
    pub mod variational {}
    #[doc = include_str!("../../../book/src/feynman-kac.md")]
    pub mod feynman_kac {}
    #[doc = include_str!("../../../book/src/large-deviations.md")]
    pub mod large_deviations {}
    #[doc = include_str!("../../../book/src/harness.md")]
    pub mod harness {}
}
