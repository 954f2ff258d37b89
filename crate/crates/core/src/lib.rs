//! Local hidden-variable (LHV) models for noisy bipartite entangled states.
//!
//! The crate is `no_std` with `alloc`. It contains:
//!
//! * [`qcore`]: complex linear algebra for states, measurements, exact
//!   quantum joint probabilities, Haar sampling, Schmidt decomposition and
//!   the partial-transpose check.
//! * [`projective`]: the isotropic-state model for projective measurements
//!   (Born-rule response for Alice, argmax response for Bob) and its
//!   harmonic-number threshold.
//! * [`nielsen`]: extension of the model to arbitrary pure states through a
//!   simulated source measurement, and completion of the local noise to
//!   white noise.
//! * [`povm`]: the general-measurement model with Heaviside response.
//! * [`bell`]: CHSH upper bounds, the crossover dimension and the
//!   separability constants.
//! * [`montecarlo`]: chunked, reproducible Monte Carlo with per-cell
//!   standard errors. Chunks can be driven serially here or in parallel by
//!   a std front end; both reduce in ascending chunk order.

#![no_std]

extern crate alloc;

pub mod bell;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod nielsen;
pub mod povm;
pub mod projective;
pub mod qcore;
pub mod rng;

pub use error::{Error, Result};
pub use qcore::{CMatrix, CVector, RMatrix, C64};

/// Numerical tolerances shared by every validity check.
pub mod tol {
    /// Normalization of states and probability vectors.
    pub const NORM: f64 = 1e-12;
    /// Structural identities (Hermiticity, idempotence, completeness).
    pub const STRUCT: f64 = 1e-10;
    /// Smallest admissible eigenvalue of a density matrix.
    pub const PSD: f64 = -1e-10;
    /// Source-measurement branches lighter than this are never drawn.
    pub const BRANCH: f64 = 1e-14;
}
