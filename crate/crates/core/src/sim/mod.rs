//! Statevector simulation restricted to Pauli-string rotations.
//!
//! Every gate in this crate is `exp(-i θ P / 2)` for a Pauli string `P`, applied
//! in place over amplitude pairs. No operator is ever materialized as a matrix.

mod kernels;
mod pauli;
mod statevector;

pub use kernels::{apply_conditional_rotation, apply_diagonal_quadratic};
pub use pauli::{Pauli, PauliString};
pub use statevector::Statevector;
pub(crate) use statevector::rotate_slice;

/// Largest register the simulator accepts (2^30 amplitudes, 16 GiB).
pub const MAX_QUBITS: usize = 30;
