use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

use super::index::check_register;
use super::{c, C64};

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Requires unit 2-norm within 1e-12.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = Self::qubits_for(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n_qubits = Self::qubits_for(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    fn qubits_for(len: usize) -> Result<usize> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "amplitude vector length {len} is not 2^n with n >= 1"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_register(n)?;
        Ok(n)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut amplitudes = vec![c(0.0, 0.0); dim];
        amplitudes[index] = c(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn zero() -> Self {
        Self::basis(1, 0).expect("one qubit")
    }

    pub fn one() -> Self {
        Self::basis(1, 1).expect("one qubit")
    }

    pub fn plus_x() -> Self {
        Self::single(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0))
    }

    pub fn minus_x() -> Self {
        Self::single(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0))
    }

    pub fn plus_y() -> Self {
        Self::single(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2))
    }

    pub fn minus_y() -> Self {
        Self::single(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2))
    }

    fn single(a0: C64, a1: C64) -> Self {
        Self {
            n_qubits: 1,
            amplitudes: vec![a0, a1],
        }
    }

    /// `(|01> + sign * e^{i phi} |10>) / sqrt 2`.
    pub fn psi(sign: f64, phi: f64) -> Self {
        let rel = C64::from_polar(sign * FRAC_1_SQRT_2, phi);
        Self {
            n_qubits: 2,
            amplitudes: vec![c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0), rel, c(0.0, 0.0)],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        check_register(self.n_qubits + other.n_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            n_qubits: self.n_qubits + other.n_qubits,
            amplitudes,
        })
    }

    /// `|<self|other>|^2`.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let inner: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm_sqr())
    }
}
