use crate::error::{Error, Result};

use super::MAX_QUBITS;

/// Bit mask of qubit `q` in an `n`-qubit index (qubit 0 is the MSB).
#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, q: usize) -> usize {
    1 << (n_qubits - 1 - q)
}

pub(crate) fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::Invalid("register must hold at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits));
    }
    Ok(())
}

pub(crate) fn check_targets(n_qubits: usize, targets: &[usize]) -> Result<()> {
    for (k, &t) in targets.iter().enumerate() {
        if t >= n_qubits {
            return Err(Error::BadTarget {
                index: t,
                n_qubits,
            });
        }
        if targets[..k].contains(&t) {
            return Err(Error::DuplicateTarget(t));
        }
    }
    Ok(())
}

/// Splits register indices into a local index over `targets` (first target
/// is the most significant local bit) and the remaining bits.
#[derive(Debug, Clone)]
pub(crate) struct TargetMap {
    masks: Vec<usize>,
    all: usize,
}

impl TargetMap {
    pub(crate) fn new(n_qubits: usize, targets: &[usize]) -> Self {
        let masks: Vec<usize> = targets.iter().map(|&t| qubit_mask(n_qubits, t)).collect();
        let all = masks.iter().fold(0, |acc, m| acc | m);
        Self { masks, all }
    }

    #[inline]
    pub(crate) fn local(&self, i: usize) -> usize {
        let k = self.masks.len();
        self.masks
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &m)| acc | (usize::from(i & m != 0) << (k - 1 - j)))
    }

    #[inline]
    pub(crate) fn rest(&self, i: usize) -> usize {
        i & !self.all
    }

    #[inline]
    pub(crate) fn compose(&self, rest: usize, local: usize) -> usize {
        let k = self.masks.len();
        self.masks.iter().enumerate().fold(rest, |acc, (j, &m)| {
            if (local >> (k - 1 - j)) & 1 == 1 {
                acc | m
            } else {
                acc
            }
        })
    }

    pub(crate) fn local_dim(&self) -> usize {
        1 << self.masks.len()
    }
}
