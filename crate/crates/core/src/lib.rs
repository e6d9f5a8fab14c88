//! Benchmark suite for hybrid digitized-counterdiabatic and QAOA circuits on
//! Sherrington–Kirkpatrick spin glasses.
//!
//! The crate is layered bottom-up:
//!
//! - [`sim`]: statevector and Pauli-string rotations
//! - [`ising`]: SK instances, the diagonal cost, exact ground states
//! - [`ansatz`]: DCQC, QAOA and multi-angle QAOA circuits with parameter binding
//! - [`grad`]: parameter-shift, SPSA, adjoint and finite-difference gradients
//! - [`optim`]: the eight optimizers and the run loop producing [`optim::RunRecord`]s
//! - [`pca`]: trajectory PCA and cost-landscape grids
//! - [`harness`]: experiment configs, protocols and file output used by the CLI

pub mod ansatz;
pub mod error;
pub mod grad;
pub mod harness;
pub mod ising;
pub mod optim;
pub mod pca;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
