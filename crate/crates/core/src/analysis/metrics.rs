use crate::error::{Error, Result};
use crate::protocol::{undo_memory_frame, PairSign, TrialRecord};
use crate::qstate::density::hermitian_eigenvalues;
use crate::qstate::{gates, DensityMatrix, Pauli, PureState, PHYSICAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellTarget {
    PsiPlus,
    PsiMinus,
}

impl BellTarget {
    pub fn state(self) -> PureState {
        match self {
            BellTarget::PsiPlus => PureState::psi(1.0, 0.0),
            BellTarget::PsiMinus => PureState::psi(-1.0, 0.0),
        }
    }
}

impl From<PairSign> for BellTarget {
    fn from(pair: PairSign) -> Self {
        match pair {
            PairSign::SameDetector => BellTarget::PsiPlus,
            PairSign::DifferentDetector => BellTarget::PsiMinus,
        }
    }
}

/// The three diagonal two-qubit Pauli correlators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlators {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
}

impl Correlators {
    pub fn of(rho: &DensityMatrix) -> Result<Self> {
        if rho.n_qubits() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: rho.n_qubits(),
            });
        }
        Ok(Self {
            xx: rho.pauli_expectation(&[Pauli::X, Pauli::X])?,
            yy: rho.pauli_expectation(&[Pauli::Y, Pauli::Y])?,
            zz: rho.pauli_expectation(&[Pauli::Z, Pauli::Z])?,
        })
    }

    pub fn bell_fidelity(&self, target: BellTarget) -> Result<f64> {
        bell_fidelity_from_paulis(self.xx, self.yy, self.zz, target)
    }
}

/// Fidelity with `|Psi+>` or `|Psi->` from the diagonal correlators:
/// `(1 + xx + yy - zz) / 4`, with the `xx` and `yy` signs flipped for
/// `|Psi->`. The raw value is returned (no clamping).
pub fn bell_fidelity_from_paulis(xx: f64, yy: f64, zz: f64, target: BellTarget) -> Result<f64> {
    for (name, v) in [("xx", xx), ("yy", yy), ("zz", zz)] {
        // round-off on exact +-1 correlators is tolerated
        if !(v.abs() <= 1.0 + PHYSICAL_TOL) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                invariant: "correlator in [-1, 1]",
            });
        }
    }
    let s = match target {
        BellTarget::PsiPlus => 1.0,
        BellTarget::PsiMinus => -1.0,
    };
    Ok((1.0 + s * xx + s * yy - zz) / 4.0)
}

/// Partial transpose of a two-qubit state on the second qubit.
pub fn partial_transpose(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: rho.n_qubits(),
        });
    }
    Ok(rho.map_entries(|i, j, _| {
        let (a, b) = (i >> 1, i & 1);
        let (a2, b2) = (j >> 1, j & 1);
        rho.get((a << 1) | b2, (a2 << 1) | b)
    }))
}

/// `log2 || rho^{T_B} ||_1`, from the eigenvalues of the partial transpose.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    let pt = partial_transpose(rho)?;
    let norm: f64 = hermitian_eigenvalues(4, pt.entries())
        .iter()
        .map(|l| l.abs())
        .sum();
    Ok(norm.log2().max(0.0))
}

/// Heralded memory state of one trial with the memory frame undone and the
/// detector signature removed: different-detector heralds get a local Z on
/// memory A, so every aligned state targets `|Psi+>`. Local operations leave
/// entanglement measures unchanged.
pub fn aligned_memory_state(rec: &TrialRecord) -> Result<Option<DensityMatrix>> {
    let (Some(rho), Some(sig)) = (&rec.final_memory_state, rec.signatures) else {
        return Ok(None);
    };
    if !rec.heralded {
        return Ok(None);
    }
    let rho = undo_memory_frame(rho)?;
    Ok(Some(match sig.pair() {
        PairSign::SameDetector => rho,
        PairSign::DifferentDetector => rho.apply_gate(&gates::z(), &[0])?,
    }))
}

/// Equal-weight average of a non-empty set of states.
pub fn average_state<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> Result<DensityMatrix> {
    let states: Vec<&DensityMatrix> = states.into_iter().collect();
    if states.is_empty() {
        return Err(Error::NoHeraldedEvents);
    }
    let w = 1.0 / states.len() as f64;
    let parts: Vec<(f64, &DensityMatrix)> = states.into_iter().map(|s| (w, s)).collect();
    DensityMatrix::mixture(&parts)
}

/// Average aligned heralded state over both detector signatures.
pub fn mean_heralded_state(trials: &[TrialRecord]) -> Result<DensityMatrix> {
    let aligned = aligned_states(trials)?;
    average_state(aligned.iter())
}

pub(crate) fn aligned_states(trials: &[TrialRecord]) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::new();
    for rec in trials {
        if let Some(rho) = aligned_memory_state(rec)? {
            out.push(rho);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{raw_state, DetectorSign};

    #[test]
    fn fidelity_from_paulis_examples() {
        assert_eq!(bell_fidelity_from_paulis(1.0, 1.0, -1.0, BellTarget::PsiPlus).unwrap(), 1.0);
        assert_eq!(bell_fidelity_from_paulis(0.0, 0.0, 0.0, BellTarget::PsiMinus).unwrap(), 0.25);
        assert_eq!(bell_fidelity_from_paulis(-1.0, -1.0, -1.0, BellTarget::PsiMinus).unwrap(), 1.0);
        assert!(matches!(
            bell_fidelity_from_paulis(1.2, 0.0, 0.0, BellTarget::PsiPlus),
            Err(Error::OutOfRange { name: "xx", .. })
        ));
    }

    #[test]
    fn negativity_examples() {
        for sign in [1.0, -1.0] {
            let bell = DensityMatrix::from_pure(&PureState::psi(sign, 0.3));
            assert!((log_negativity(&bell).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(log_negativity(&DensityMatrix::basis(2, 0).unwrap()).unwrap(), 0.0);
        assert_eq!(log_negativity(&DensityMatrix::maximally_mixed(2).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn raw_state_negativity_closed_form() {
        // PT of c2 Psi + s2 |00>: the {00, 11} block [[s2, c2/2], [c2/2, 0]]
        // has eigenvalues (s2 +- sqrt(s4 + c4)) / 2; the rest stay positive.
        let theta = std::f64::consts::PI / 6.0;
        let (s2, c2) = (0.25f64, 0.75f64);
        let neg = (s2 - (s2 * s2 + c2 * c2).sqrt()) / 2.0;
        let expected = (1.0 + 2.0 * neg.abs()).log2();
        let rho = raw_state(theta, DetectorSign::Plus, 0.0, 1.0, 0.0);
        assert!((log_negativity(&rho).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_is_involution() {
        let rho = raw_state(0.4, DetectorSign::Minus, 1.2, 0.8, 0.05);
        let back = partial_transpose(&partial_transpose(&rho).unwrap()).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn correlators_of_bell_states() {
        let c = Correlators::of(&DensityMatrix::from_pure(&PureState::psi(-1.0, 0.0))).unwrap();
        assert!((c.xx + 1.0).abs() < 1e-15 && (c.yy + 1.0).abs() < 1e-15 && (c.zz + 1.0).abs() < 1e-15);
        assert!((c.bell_fidelity(BellTarget::PsiMinus).unwrap() - 1.0).abs() < 1e-15);
    }
}
