use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};

use super::index::{check_register, check_targets, qubit_mask, TargetMap};
use super::{c, GateMatrix, Operator, Pauli, PureState, C64, PHYSICAL_TOL, UNDERFLOW_PROB};

/// Trace-one, Hermitian, positive semidefinite operator on 1 to 4 qubits.
///
/// Entries are stored row-major. Constructors that accept arbitrary entries
/// validate physicality; operations built from valid inputs do not re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: Vec<C64>,
}

/// Outcome of a projective Z measurement on one qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub outcome: u8,
    /// Born probability of `outcome`.
    pub probability: f64,
    pub post: DensityMatrix,
}

impl DensityMatrix {
    /// Builds a state from row-major entries and checks trace, hermiticity
    /// and positivity at the physical tolerances.
    pub fn from_entries(n_qubits: usize, entries: Vec<C64>) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1 << n_qubits;
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let rho = Self { n_qubits, entries };
        rho.check_physical()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n_qubits: usize, entries: Vec<C64>) -> Self {
        debug_assert_eq!(entries.len(), 1 << (2 * n_qubits));
        Self { n_qubits, entries }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let amps = psi.amplitudes();
        let dim = amps.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in amps {
            for b in amps {
                entries.push(a * b.conj());
            }
        }
        Self::from_raw(psi.n_qubits(), entries)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Ok(Self::from_pure(&PureState::basis(n_qubits, index)?))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut entries = vec![c(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = c(1.0 / dim as f64, 0.0);
        }
        Ok(Self::from_raw(n_qubits, entries))
    }

    /// Convex combination `sum w_k rho_k`. Weights must be nonnegative and
    /// sum to one within the physical tolerance.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::Invalid("empty mixture".into()));
        };
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if parts.iter().any(|(w, _)| *w < 0.0) || (total - 1.0).abs() > PHYSICAL_TOL {
            return Err(Error::Invalid(format!(
                "mixture weights must be nonnegative and sum to 1 (sum {total})"
            )));
        }
        let mut entries = vec![c(0.0, 0.0); first.entries.len()];
        for (w, rho) in parts {
            if rho.n_qubits != first.n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: first.dim(),
                    got: rho.dim(),
                });
            }
            for (acc, z) in entries.iter_mut().zip(&rho.entries) {
                *acc += z * *w;
            }
        }
        Ok(Self::from_raw(first.n_qubits, entries))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(self.dim(), &self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn check_physical(&self) -> Result<()> {
        if self.entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Unphysical("non-finite entry".into()));
        }
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > PHYSICAL_TOL {
            return Err(Error::Unphysical(format!("trace is {tr}")));
        }
        let herm = self.hermiticity_error();
        if herm > PHYSICAL_TOL {
            return Err(Error::Unphysical(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -1e-8 {
            return Err(Error::Unphysical(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(())
    }

    /// `self (x) other`, with `self` on the leading (more significant) qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        check_register(n)?;
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i in 0..da {
            for j in 0..da {
                let a = self.get(i, j);
                if a == c(0.0, 0.0) {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        entries[(i * db + k) * d + (j * db + l)] = a * other.get(k, l);
                    }
                }
            }
        }
        Ok(Self::from_raw(n, entries))
    }

    /// `U rho U^dag` with `U` embedded on `targets` (first target is the
    /// gate's most significant qubit).
    pub fn apply_gate(&self, gate: &GateMatrix, targets: &[usize]) -> Result<Self> {
        self.check_operator(gate.operator(), targets)?;
        let map = TargetMap::new(self.n_qubits, targets);
        Ok(self.sandwich(gate.operator(), &map))
    }

    /// `sum_k K_k rho K_k^dag`. The set must satisfy `sum K^dag K = I`
    /// within 1e-9.
    pub fn apply_kraus(&self, kraus: &[Operator], targets: &[usize]) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::NotTracePreserving(1.0));
        };
        for k in kraus {
            if k.arity() != first.arity() {
                return Err(Error::ArityMismatch {
                    operator: k.arity(),
                    targets: first.arity(),
                });
            }
            self.check_operator(k, targets)?;
        }
        let completeness_dev = kraus_completeness_deviation(kraus);
        if completeness_dev > PHYSICAL_TOL {
            return Err(Error::NotTracePreserving(completeness_dev));
        }
        let map = TargetMap::new(self.n_qubits, targets);
        let mut acc = vec![c(0.0, 0.0); self.entries.len()];
        for k in kraus {
            let term = self.sandwich(k, &map);
            for (a, t) in acc.iter_mut().zip(term.entries) {
                *a += t;
            }
        }
        Ok(Self::from_raw(self.n_qubits, acc))
    }

    fn check_operator(&self, op: &Operator, targets: &[usize]) -> Result<()> {
        check_targets(self.n_qubits, targets)?;
        if op.arity() != targets.len() {
            return Err(Error::ArityMismatch {
                operator: op.arity(),
                targets: targets.len(),
            });
        }
        Ok(())
    }

    /// `A rho A^dag` with `A` embedded through `map`.
    fn sandwich(&self, op: &Operator, map: &TargetMap) -> Self {
        let d = self.dim();
        let ld = map.local_dim();
        // left: (A rho)[i][j] = sum_l A[loc(i)][l] rho[compose(rest(i), l)][j]
        let mut left = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            let (rest, li) = (map.rest(i), map.local(i));
            for l in 0..ld {
                let a = op.get(li, l);
                if a == c(0.0, 0.0) {
                    continue;
                }
                let src = map.compose(rest, l) * d;
                let dst = i * d;
                for j in 0..d {
                    left[dst + j] += a * self.entries[src + j];
                }
            }
        }
        // right: (X A^dag)[i][j] = sum_l X[i][compose(rest(j), l)] conj(A[loc(j)][l])
        let mut out = vec![c(0.0, 0.0); d * d];
        for j in 0..d {
            let (rest, lj) = (map.rest(j), map.local(j));
            for l in 0..ld {
                let a = op.get(lj, l).conj();
                if a == c(0.0, 0.0) {
                    continue;
                }
                let src = map.compose(rest, l);
                for i in 0..d {
                    out[i * d + j] += left[i * d + src] * a;
                }
            }
        }
        Self::from_raw(self.n_qubits, out)
    }

    /// Reduced state on `keep`, in the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        check_targets(self.n_qubits, keep)?;
        let map = TargetMap::new(self.n_qubits, keep);
        let d = self.dim();
        let kd = map.local_dim();
        let mut entries = vec![c(0.0, 0.0); kd * kd];
        for i in 0..d {
            for j in 0..d {
                if map.rest(i) == map.rest(j) {
                    entries[map.local(i) * kd + map.local(j)] += self.get(i, j);
                }
            }
        }
        Ok(Self::from_raw(keep.len(), entries))
    }

    /// Reorders qubits: new qubit `k` is old qubit `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: order.len(),
            });
        }
        check_targets(self.n_qubits, order)?;
        let map = TargetMap::new(self.n_qubits, order);
        let d = self.dim();
        // new index I has local(old) == I when old = compose(0, I)
        let old_of: Vec<usize> = (0..d).map(|i| map.compose(0, i)).collect();
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                entries[i * d + j] = self.get(old_of[i], old_of[j]);
            }
        }
        Ok(Self::from_raw(self.n_qubits, entries))
    }

    /// Probability of reading `outcome` on qubit `q` and the renormalized
    /// post-measurement state, if the probability is above underflow.
    pub fn project(&self, q: usize, outcome: u8) -> Result<(f64, Option<Self>)> {
        check_targets(self.n_qubits, &[q])?;
        let mask = qubit_mask(self.n_qubits, q);
        let want = if outcome == 0 { 0 } else { mask };
        let d = self.dim();
        let prob: f64 = (0..d)
            .filter(|i| i & mask == want)
            .map(|i| self.get(i, i).re)
            .sum();
        if prob < UNDERFLOW_PROB {
            return Ok((prob.max(0.0), None));
        }
        let mut entries = vec![c(0.0, 0.0); d * d];
        for i in (0..d).filter(|i| i & mask == want) {
            for j in (0..d).filter(|j| j & mask == want) {
                entries[i * d + j] = self.get(i, j) / prob;
            }
        }
        Ok((prob, Some(Self::from_raw(self.n_qubits, entries))))
    }

    /// Samples a Z measurement of qubit `q` with Born probabilities.
    pub fn measure_qubit<R: Rng + ?Sized>(&self, q: usize, rng: &mut R) -> Result<Measurement> {
        let (p0, post0) = self.project(q, 0)?;
        let u: f64 = rng.random();
        let outcome = if u < p0 { 0 } else { 1 };
        if outcome == 0 {
            let post = post0.ok_or(Error::ProbabilityUnderflow(p0))?;
            return Ok(Measurement {
                outcome,
                probability: p0,
                post,
            });
        }
        let (p1, post1) = self.project(q, 1)?;
        let post = post1.ok_or(Error::ProbabilityUnderflow(p1))?;
        Ok(Measurement {
            outcome,
            probability: p1,
            post,
        })
    }

    /// `Tr(rho P)` for a tensor product of Paulis, one label per qubit.
    pub fn pauli_expectation(&self, ops: &[Pauli]) -> Result<f64> {
        if ops.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: ops.len(),
            });
        }
        let n = self.n_qubits;
        let flip = ops
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .fold(0, |acc, (q, _)| acc | qubit_mask(n, q));
        let mut total = c(0.0, 0.0);
        for j in 0..self.dim() {
            // P|j> = phase(j) |j ^ flip>, so (rho P)[j][j] = rho[j][j ^ flip] phase(j)
            let mut phase = c(1.0, 0.0);
            for (q, p) in ops.iter().enumerate() {
                let bit = j & qubit_mask(n, q) != 0;
                phase *= match (p, bit) {
                    (Pauli::Y, false) => c(0.0, 1.0),
                    (Pauli::Y, true) => c(0.0, -1.0),
                    (Pauli::Z, true) => c(-1.0, 0.0),
                    _ => c(1.0, 0.0),
                };
            }
            total += self.get(j, j ^ flip) * phase;
        }
        Ok(total.re)
    }

    /// `<target| rho |target>`.
    pub fn fidelity_with_pure(&self, target: &PureState) -> Result<f64> {
        if target.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: target.dim(),
            });
        }
        let psi = target.amplitudes();
        let d = self.dim();
        let mut acc = c(0.0, 0.0);
        for i in 0..d {
            if psi[i] == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                acc += psi[i].conj() * self.get(i, j) * psi[j];
            }
        }
        Ok(acc.re)
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        if self.n_qubits != other.n_qubits {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Plain-text dump: a header line, then one line per row of
    /// space-separated `re im` pairs at 17 significant digits.
    pub fn dump(&self) -> String {
        let d = self.dim();
        let mut out = format!("density_matrix n_qubits={} dim={}\n", self.n_qubits, d);
        for i in 0..d {
            let row: Vec<String> = (0..d)
                .map(|j| {
                    let z = self.get(i, j);
                    format!("{:.16e} {:.16e}", z.re, z.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    /// Parses the output of [`DensityMatrix::dump`].
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty dump".into()))?;
        let n_qubits: usize = header
            .split_whitespace()
            .find_map(|t| t.strip_prefix("n_qubits="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Invalid(format!("bad dump header `{header}`")))?;
        check_register(n_qubits)?;
        let mut values = Vec::new();
        for line in lines {
            for tok in line.split_whitespace() {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad number `{tok}`: {e}")))?,
                );
            }
        }
        let entries = values.chunks(2).map(|p| c(p[0], p[1])).collect();
        Self::from_entries(n_qubits, entries)
    }

    pub(crate) fn map_entries(&self, f: impl Fn(usize, usize, C64) -> C64) -> Self {
        let d = self.dim();
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(k, &z)| f(k / d, k % d, z))
            .collect();
        Self::from_raw(self.n_qubits, entries)
    }
}

/// Largest entrywise deviation of `sum K^dag K` from the identity.
pub fn kraus_completeness_deviation(kraus: &[Operator]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let d = first.dim();
    let mut sum = vec![c(0.0, 0.0); d * d];
    for k in kraus {
        let kk = &k.dagger() * k;
        for (s, z) in sum.iter_mut().zip(kk.entries()) {
            *s += z;
        }
    }
    Operator::new(first.arity(), sum)
        .map(|op| op.identity_deviation())
        .unwrap_or(f64::INFINITY)
}

/// Eigenvalues (ascending) of the Hermitian part of a row-major matrix.
pub(crate) fn hermitian_eigenvalues(dim: usize, entries: &[C64]) -> Vec<f64> {
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        0.5 * (entries[i * dim + j] + entries[j * dim + i].conj())
    });
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::gates;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rho_plus_x() -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::plus_x())
    }

    fn bell_plus() -> DensityMatrix {
        DensityMatrix::from_pure(&PureState::psi(1.0, 0.0))
    }

    #[test]
    fn tensor_of_zeros_is_zero_zero() {
        let z = DensityMatrix::basis(1, 0).unwrap();
        assert_eq!(z.tensor(&z).unwrap(), DensityMatrix::basis(2, 0).unwrap());
    }

    #[test]
    fn tensor_with_mixed_then_trace_back() {
        let rho = rho_plus_x();
        let joint = rho
            .tensor(&DensityMatrix::maximally_mixed(1).unwrap())
            .unwrap();
        assert!(joint.partial_trace(&[0]).unwrap().max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn tensor_overflow() {
        let a = DensityMatrix::maximally_mixed(3).unwrap();
        assert_eq!(a.tensor(&a), Err(Error::TooManyQubits(6)));
    }

    #[test]
    fn x_flips_zero() {
        let out = DensityMatrix::basis(1, 0)
            .unwrap()
            .apply_gate(&gates::x(), &[0])
            .unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(1, 1).unwrap()) < 1e-15);
    }

    #[test]
    fn rz_full_turn_leaves_state() {
        let rho = DensityMatrix::from_pure(&PureState::plus_y());
        let out = rho.apply_gate(&gates::rz(2.0 * PI), &[0]).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let rho = bell_plus();
        let out = rho
            .apply_gate(&gates::h(), &[1])
            .and_then(|r| r.apply_gate(&gates::h(), &[1]))
            .unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn gate_target_errors() {
        let rho = bell_plus();
        assert!(matches!(
            rho.apply_gate(&gates::cnot(), &[0, 2]),
            Err(Error::BadTarget { index: 2, .. })
        ));
        assert_eq!(
            rho.apply_gate(&gates::cnot(), &[1, 1]),
            Err(Error::DuplicateTarget(1))
        );
        assert!(matches!(
            rho.apply_gate(&gates::x(), &[0, 1]),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn cnot_control_is_first_target() {
        // |10> -> |11> with control on qubit 0
        let rho = DensityMatrix::basis(2, 0b10).unwrap();
        let out = rho.apply_gate(&gates::cnot(), &[0, 1]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(2, 0b11).unwrap()) < 1e-15);
        // reversed targets: qubit 1 controls, |10> is untouched
        let out = rho.apply_gate(&gates::cnot(), &[1, 0]).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn identity_kraus() {
        let rho = bell_plus();
        let out = rho.apply_kraus(&[Operator::identity(1)], &[1]).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn full_dephasing_kraus_erases_coherence() {
        let p0 = Operator::real(1, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p1 = Operator::real(1, &[0.0, 0.0, 0.0, 1.0]).unwrap();
        let out = rho_plus_x().apply_kraus(&[p0, p1], &[0]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-15);
    }

    #[test]
    fn depolarizing_three_quarters_is_fully_mixing() {
        // p = 3/4 in the Pauli form: K0 = sqrt(1 - p) I, K_{x,y,z} = sqrt(p/3) P
        let p: f64 = 0.75;
        let ks = vec![
            Operator::identity(1).scaled((1.0 - p).sqrt()),
            gates::x().operator().scaled((p / 3.0).sqrt()),
            gates::y().operator().scaled((p / 3.0).sqrt()),
            gates::z().operator().scaled((p / 3.0).sqrt()),
        ];
        let rho = DensityMatrix::from_pure(
            &PureState::normalized(vec![c(0.3, 0.1), c(-0.5, 0.8)]).unwrap(),
        );
        let out = rho.apply_kraus(&ks, &[0]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-12);
    }

    #[test]
    fn rejects_non_trace_preserving_kraus() {
        let half = Operator::identity(1).scaled(0.5);
        assert!(matches!(
            rho_plus_x().apply_kraus(&[half], &[0]),
            Err(Error::NotTracePreserving(_))
        ));
    }

    #[test]
    fn partial_trace_of_bell_is_mixed() {
        let out = bell_plus().partial_trace(&[0]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::maximally_mixed(1).unwrap()) < 1e-15);
        assert_eq!(bell_plus().partial_trace(&[]), Err(Error::EmptyKeep));
    }

    #[test]
    fn partial_trace_of_product_returns_factor() {
        let a = DensityMatrix::from_pure(&PureState::plus_y());
        let b = DensityMatrix::basis(2, 3).unwrap();
        let joint = b.tensor(&a).unwrap();
        assert!(joint.partial_trace(&[2]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(joint.partial_trace(&[0, 1]).unwrap().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn permute_swaps_qubits() {
        let rho = DensityMatrix::basis(2, 0b10).unwrap();
        let out = rho.permute(&[1, 0]).unwrap();
        assert!(out.max_abs_diff(&DensityMatrix::basis(2, 0b01).unwrap()) < 1e-15);
    }

    #[test]
    fn measure_eigenstate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DensityMatrix::basis(1, 1)
            .unwrap()
            .measure_qubit(0, &mut rng)
            .unwrap();
        assert_eq!((m.outcome, m.probability), (1, 1.0));
    }

    #[test]
    fn measure_plus_x_half_half() {
        let rho = rho_plus_x();
        let (p0, _) = rho.project(0, 0).unwrap();
        let (p1, _) = rho.project(0, 1).unwrap();
        assert!((p0 - 0.5).abs() < 1e-15 && (p1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measurement_frequency_binomial() {
        // p(1) = sin^2(0.4) for cos(0.4)|0> + sin(0.4)|1>
        let psi = PureState::new(vec![c(0.4f64.cos(), 0.0), c(0.4f64.sin(), 0.0)]).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let p1 = 0.4f64.sin().powi(2);
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ones = (0..n)
            .filter(|_| rho.measure_qubit(0, &mut rng).unwrap().outcome == 1)
            .count();
        let sigma = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p1).abs() < 3.0 * sigma);
    }

    #[test]
    fn pauli_expectations_on_psi_plus() {
        let rho = bell_plus();
        let zz = rho.pauli_expectation(&[Pauli::Z, Pauli::Z]).unwrap();
        let xx = rho.pauli_expectation(&[Pauli::X, Pauli::X]).unwrap();
        let yy = rho.pauli_expectation(&[Pauli::Y, Pauli::Y]).unwrap();
        assert!((zz + 1.0).abs() < 1e-15);
        assert!((xx - 1.0).abs() < 1e-15);
        assert!((yy - 1.0).abs() < 1e-15);
        assert!(rho.pauli_expectation(&[Pauli::Z]).is_err());
    }

    #[test]
    fn pauli_y_single_qubit() {
        let rho = DensityMatrix::from_pure(&PureState::plus_y());
        assert!((rho.pauli_expectation(&[Pauli::Y]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_basics() {
        let psi = PureState::psi(1.0, 0.0);
        assert!((bell_plus().fidelity_with_pure(&psi).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((mixed.fidelity_with_pure(&psi).unwrap() - 0.25).abs() < 1e-15);
        assert!(mixed.fidelity_with_pure(&PureState::zero()).is_err());
    }

    #[test]
    fn dump_round_trips() {
        let rho = DensityMatrix::from_pure(&PureState::psi(-1.0, 0.3));
        let text = rho.dump();
        assert!(text.starts_with("density_matrix n_qubits=2 dim=4\n"));
        let back = DensityMatrix::parse_dump(&text).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn from_entries_rejects_unphysical() {
        let bad = vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)];
        assert!(matches!(
            DensityMatrix::from_entries(1, bad),
            Err(Error::Unphysical(_))
        ));
        let negative = vec![c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)];
        assert!(DensityMatrix::from_entries(1, negative).is_err());
    }
}
