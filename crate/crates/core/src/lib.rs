//! Exact non-Markovian dynamics of single and double quantum dots coupled to
//! two fermionic leads.
//!
//! Energies are in μeV and times in 1/μeV with ħ = 1.
//!
//! * [`bath`] builds lead correlation kernels.
//! * [`volterra`] solves the linear integro-differential equations that fix
//!   the master-equation coefficients.
//! * [`singledot`] and [`doubledot`] compute the coefficients and propagate
//!   the reduced density matrix.
//! * [`markov`] holds the memoryless reference equations.

pub mod bath;
pub mod doubledot;
pub mod error;
pub mod markov;
pub mod model;
pub mod numerics;
pub mod singledot;
pub mod volterra;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, UniformGrid, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/volterra.md")]
    mod volterra {}
    #[doc = include_str!("../../../book/src/single-dot.md")]
    mod single_dot {}
    #[doc = include_str!("../../../book/src/double-dot.md")]
    mod double_dot {}
    #[doc = include_str!("../../../book/src/markov.md")]
    mod markov {}
}
