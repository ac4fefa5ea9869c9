//! Exact and naive mean-field computations for third-order classical and
//! quantum Boltzmann machines.
//!
//! The crate treats each model family as an exponential family with natural
//! coordinates `(h, w, v)` and expectation coordinates `(m, μ, ι)`.  Exact
//! quantities (log-partition, moments, divergences) are computed by brute force
//! at desk scale; the naive mean-field solution is obtained as the
//! e-projection onto the product family, and the m-projection recovers the
//! exact first moments.
//!
//! | module | contents |
//! |--------|----------|
//! | [`tensor`] | Pauli matrices, site operators, Hermitian `exp`/`log` |
//! | [`cbm`] | classical models, enumeration, product-family charts |
//! | [`cbm_meanfield`] | classical e-/m-projections and the damped solver |
//! | [`qbm`] | quantum models, density matrices, product states |
//! | [`qbm_meanfield`] | quantum e-/m-projections |
//! | [`harness`] | model files, random models, comparison runs and sweeps |
//!
//! The guide in `book/` walks through the same material with runnable
//! snippets; its code blocks are compiled as doc-tests of this crate.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cbm;
pub mod cbm_meanfield;
mod error;
pub mod harness;
mod index;
pub mod numeric;
pub mod qbm;
pub mod qbm_meanfield;
pub mod rng;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use index::{pairs, triples};
pub use solver::{Init, SolveReport, SolverConfig};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/projections.md")]
    mod projections {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/quantum_meanfield.md")]
    mod quantum_meanfield {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
