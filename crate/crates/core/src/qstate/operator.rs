use std::ops::Mul;

use crate::error::{Error, Result};

use super::{c, C64, EXACT_TOL};

/// A square operator on one or two qubits, stored row-major.
///
/// Kraus operators use this type directly; unitary gates wrap it in
/// [`GateMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    arity: usize,
    entries: Vec<C64>,
}

impl Operator {
    pub fn new(arity: usize, entries: Vec<C64>) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::Invalid(format!(
                "operators act on 1 or 2 qubits, not {arity}"
            )));
        }
        let dim = 1 << arity;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invalid("operator has non-finite entries".into()));
        }
        Ok(Self { arity, entries })
    }

    /// Builds an operator from real row-major entries.
    pub fn real(arity: usize, entries: &[f64]) -> Result<Self> {
        Self::new(arity, entries.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn identity(arity: usize) -> Self {
        let dim = 1 << arity;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = c(1.0, 0.0);
        }
        Self { arity, entries }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        1 << self.arity
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            arity: self.arity,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim();
        let mut entries = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[j * d + i] = self.get(i, j).conj();
            }
        }
        Self {
            arity: self.arity,
            entries,
        }
    }

    /// Kronecker product; `self` acts on the more significant qubit.
    pub fn kron(&self, other: &Operator) -> Result<Self> {
        let arity = self.arity + other.arity;
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut entries = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..da {
            for j in 0..da {
                let a = self.get(i, j);
                for k in 0..db {
                    for l in 0..db {
                        entries[(i * db + k) * d + (j * db + l)] = a * other.get(k, l);
                    }
                }
            }
        }
        Self::new(arity, entries)
    }

    /// Largest entrywise deviation of `self` from the identity.
    pub fn identity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.get(i, j) - c(target, 0.0)).norm());
            }
        }
        worst
    }

    fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.arity, rhs.arity, "operator arity mismatch");
        let d = self.dim();
        let mut entries = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    entries[i * d + j] += a * rhs.get(k, j);
                }
            }
        }
        Operator {
            arity: self.arity,
            entries,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

/// A unitary operator on one or two qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix(Operator);

impl GateMatrix {
    /// Validates `U^dag U = I` within 1e-10.
    pub fn new(op: Operator) -> Result<Self> {
        let dev = (&op.dagger() * &op).identity_deviation();
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(op))
    }

    pub fn from_entries(arity: usize, entries: Vec<C64>) -> Result<Self> {
        Self::new(Operator::new(arity, entries)?)
    }

    pub fn arity(&self) -> usize {
        self.0.arity()
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.dagger())
    }

    pub fn kron(&self, other: &GateMatrix) -> Result<Self> {
        Ok(Self(self.0.kron(&other.0)?))
    }

    /// `self * rhs`, i.e. `rhs` is applied first.
    pub fn then_after(&self, rhs: &GateMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }

    /// Entrywise equality up to a global phase.
    pub fn equals_up_to_phase(&self, other: &GateMatrix) -> bool {
        if self.arity() != other.arity() {
            return false;
        }
        let a = self.0.entries();
        let b = other.0.entries();
        let Some(k) = (0..a.len()).find(|&k| a[k].norm() > 1e-6) else {
            return false;
        };
        if b[k].norm() < 1e-6 {
            return false;
        }
        let phase = b[k] / a[k];
        a.iter()
            .zip(b)
            .all(|(x, y)| (x * phase - y).norm() < EXACT_TOL * 10.0)
    }
}

impl AsRef<Operator> for GateMatrix {
    fn as_ref(&self) -> &Operator {
        &self.0
    }
}
