//! Bound states of a particle between infinite walls with a Cantor-like
//! piecewise-constant potential.
//!
//! The rescaled eigenvalue problem on the unit interval is
//!
//! ```text
//! [ -(1/mu^2) d^2/dx^2 + v(x) ] psi(x) = eps psi(x),   psi(0) = psi(1) = 0
//! ```
//!
//! with `v` bounded by `[-1, 1]`. Two independent engines solve it:
//!
//! * [`fd`]: three-point finite differences, Sturm-count bisection for the
//!   eigenvalues and inverse iteration for the eigenvectors.
//! * [`tm`]: exact transfer-matrix shooting across the constant segments.
//!
//! [`analysis`] builds the integrated density of states, eigenvalue
//! clusters, localization measures and `mu` sweeps on top of them.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
mod bisect;
mod error;
pub mod fd;
pub mod potential;
mod spectrum;
pub mod tm;

pub use error::{Error, Result};
pub use fd::{assemble_hamiltonian, Grid, ModelParams, Sampling, TridiagonalHamiltonian};
pub use potential::{build_cantor_potential, sample_potential, CantorSpec, PiecewisePotential};
pub use spectrum::{probability_density, Engine, Spectrum, Wavefunction};
