//! Dense state algebra for registers of one to four qubits.
//!
//! Basis ordering is fixed across the crate: qubit 0 is the most significant
//! bit of a computational-basis index, so for a register of `n` qubits the
//! ket `|q0 q1 .. q(n-1)>` lives at index `q0 * 2^(n-1) + .. + q(n-1)`.
//!
//! All values are immutable; every operation returns a new value.

pub(crate) mod density;
pub mod gates;
pub(crate) mod index;
mod operator;
mod pauli;
mod pure;

pub use density::{kraus_completeness_deviation, DensityMatrix, Measurement};
pub use num_complex::Complex64 as C64;
pub use operator::{GateMatrix, Operator};
pub use pauli::Pauli;
pub use pure::PureState;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 4;

/// Tolerance for physicality checks (trace, hermiticity, Kraus completeness).
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;

/// Branch probabilities below this are treated as underflow.
pub const UNDERFLOW_PROB: f64 = 1e-12;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
