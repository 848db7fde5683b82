//! Simulation and analysis of quantum systems driven by multiple random
//! sudden quenches.
//!
//! A protocol splits `[0, τ)` into `N` equal steps; on each step the
//! Hamiltonian is an independent draw from a time-dependent random matrix
//! ensemble. The crate estimates how the spread of the resulting evolution
//! operator (`S_N`) and its distance from the mean-generated evolution
//! (`D_N`) shrink with `N`.
//!
//! Module map:
//!
//! - [`matrix`]: dense complex matrices, Hermitian exponentials, unitary logarithms
//! - [`ensemble`]: time-dependent Gaussian ensembles and reproducible streams
//! - [`protocol`]: realizations, ordered evolution, effective Hamiltonians
//! - [`bch`]: order-2 BCH truncation, convergence certificate, log oracle
//! - [`estimators`]: mergeable moment accumulators, `S_N`, `D_N`, parity test
//! - [`analysis`]: scaling runs, power-law fits, the `R_n(N)` factor
//! - [`experiments`]: JSON-configured experiment recipes behind the CLI

pub mod analysis;
pub mod bch;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod matrix;
pub mod protocol;

pub use error::{Error, Result};
