//! Noise models for the two nodes and the photonic link.
//!
//! Channels come in two equivalent forms: an explicit Kraus set (used by the
//! generic [`DensityMatrix::apply_kraus`]) and a closed-form fast path used by
//! the protocol simulation. Tests check the two against each other.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_closed, Error, Result};
use crate::qstate::index::{check_targets, qubit_mask, TargetMap};
use crate::qstate::{gates, DensityMatrix, Operator, Pauli, C64};

/// Per-node physical constants, in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeNoiseParams {
    /// Dependence of the memory precession frequency on the communication
    /// qubit state during repumping, rad/s.
    pub delta_omega: f64,
    /// Deterministic memory phase picked up per entangling attempt, rad.
    pub phi_per_attempt: f64,
    /// Attempts after which superposition-state coherence has fallen to 1/e.
    pub memory_one_over_e_attempts: f64,
    /// Exponent of the generalized exponential decay; 1 is Markovian.
    pub decay_exponent: f64,
    /// Free-evolution dephasing time, s.
    pub t2_star: f64,
    /// Adds Gaussian free-evolution dephasing from elapsed storage time.
    pub t2_star_dephasing: bool,
    /// Two-qubit depolarizing probability after each conditional gate.
    pub local_gate_error: f64,
    pub readout_fid_0: f64,
    pub readout_fid_1: f64,
}

impl NodeNoiseParams {
    /// Node A: carbon memory with 2pi * 22.4 kHz coupling, 273 attempt 1/e
    /// constant, T2* = 3.4 ms.
    pub fn node_a() -> Self {
        Self {
            delta_omega: 2.0 * std::f64::consts::PI * 22.4e3,
            phi_per_attempt: 0.25,
            memory_one_over_e_attempts: 273.0,
            decay_exponent: 1.0,
            t2_star: 3.4e-3,
            t2_star_dephasing: false,
            local_gate_error: 0.0,
            readout_fid_0: 1.0,
            readout_fid_1: 1.0,
        }
    }

    /// Node B: 2pi * 26.6 kHz coupling, 272 attempt 1/e constant,
    /// T2* = 16.2 ms.
    pub fn node_b() -> Self {
        Self {
            delta_omega: 2.0 * std::f64::consts::PI * 26.6e3,
            phi_per_attempt: 0.21,
            memory_one_over_e_attempts: 272.0,
            t2_star: 16.2e-3,
            ..Self::node_a()
        }
    }

    /// No decay, no gate or readout error. The deterministic per-attempt
    /// phase is kept so feedback still has something to cancel.
    pub fn ideal() -> Self {
        Self {
            memory_one_over_e_attempts: f64::INFINITY,
            local_gate_error: 0.0,
            readout_fid_0: 1.0,
            readout_fid_1: 1.0,
            t2_star_dephasing: false,
            ..Self::node_a()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_closed("delta_omega", self.delta_omega, 0.0, f64::MAX, "delta_omega >= 0")?;
        if !self.phi_per_attempt.is_finite() {
            return Err(Error::OutOfRange {
                name: "phi_per_attempt",
                value: self.phi_per_attempt,
                invariant: "finite phase",
            });
        }
        if !(self.memory_one_over_e_attempts > 0.0) {
            return Err(Error::OutOfRange {
                name: "memory_one_over_e_attempts",
                value: self.memory_one_over_e_attempts,
                invariant: "memory_one_over_e_attempts > 0",
            });
        }
        if !(self.decay_exponent > 0.0 && self.decay_exponent <= 4.0) {
            return Err(Error::OutOfRange {
                name: "decay_exponent",
                value: self.decay_exponent,
                invariant: "decay_exponent in (0, 4]",
            });
        }
        if !(self.t2_star > 0.0) {
            return Err(Error::OutOfRange {
                name: "t2_star",
                value: self.t2_star,
                invariant: "t2_star > 0",
            });
        }
        check_closed("local_gate_error", self.local_gate_error, 0.0, 1.0, "probability in [0,1]")?;
        check_closed("readout_fid_0", self.readout_fid_0, 0.0, 1.0, "probability in [0,1]")?;
        check_closed("readout_fid_1", self.readout_fid_1, 0.0, 1.0, "probability in [0,1]")?;
        Ok(())
    }
}

/// Photonic-link imperfections shared by both nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonicNoiseParams {
    /// Two-photon interference visibility; scales raw-state coherence.
    pub visibility: f64,
    /// Fraction of heralds caused by dark counts.
    pub dark_count_fraction: f64,
    /// Standard deviation of the per-raw-state optical phase jitter, rad.
    pub phase_drift_sigma: f64,
}

impl PhotonicNoiseParams {
    pub fn ideal() -> Self {
        Self {
            visibility: 1.0,
            dark_count_fraction: 0.0,
            phase_drift_sigma: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_closed("visibility", self.visibility, 0.0, 1.0, "visibility in [0,1]")?;
        if !(self.dark_count_fraction >= 0.0 && self.dark_count_fraction < 1.0) {
            return Err(Error::OutOfRange {
                name: "dark_count_fraction",
                value: self.dark_count_fraction,
                invariant: "dark_count_fraction in [0,1)",
            });
        }
        check_closed(
            "phase_drift_sigma",
            self.phase_drift_sigma,
            0.0,
            f64::MAX,
            "phase_drift_sigma >= 0",
        )
    }
}

impl Default for PhotonicNoiseParams {
    fn default() -> Self {
        Self::ideal()
    }
}

/// A completely positive trace-preserving map on one or two qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Off-diagonal elements multiplied by `1 - lambda`.
    Dephasing { lambda: f64 },
    /// `rho -> (1 - p) rho + p I / 2^n`.
    Depolarizing { p: f64, n_qubits: usize },
}

impl Channel {
    pub fn n_qubits(&self) -> usize {
        match self {
            Channel::Dephasing { .. } => 1,
            Channel::Depolarizing { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn kraus(&self) -> Vec<Operator> {
        match *self {
            Channel::Dephasing { lambda } => vec![
                Operator::identity(1).scaled((1.0 - 0.5 * lambda).sqrt()),
                gates::z().operator().scaled((0.5 * lambda).sqrt()),
            ],
            Channel::Depolarizing { p, n_qubits } => {
                let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
                let terms = 1usize << (2 * n_qubits);
                let weight_rest = p / terms as f64;
                let weight_id = 1.0 - p + weight_rest;
                (0..terms)
                    .map(|code| {
                        let ops: Vec<Operator> = (0..n_qubits)
                            .map(|k| pauli_operator(paulis[(code >> (2 * k)) & 3]))
                            .collect();
                        let op = ops[1..]
                            .iter()
                            .fold(ops[0].clone(), |acc, o| acc.kron(o).expect("<= 2 qubits"));
                        let w = if code == 0 { weight_id } else { weight_rest };
                        op.scaled(w.sqrt())
                    })
                    .collect()
            }
        }
    }

    /// Applies the channel in closed form.
    pub fn apply(&self, rho: &DensityMatrix, targets: &[usize]) -> Result<DensityMatrix> {
        check_targets(rho.n_qubits(), targets)?;
        if targets.len() != self.n_qubits() {
            return Err(Error::ArityMismatch {
                operator: self.n_qubits(),
                targets: targets.len(),
            });
        }
        Ok(match *self {
            Channel::Dephasing { lambda } => dephase(rho, targets[0], lambda),
            Channel::Depolarizing { p, .. } => depolarize(rho, targets, p),
        })
    }
}

fn pauli_operator(p: Pauli) -> Operator {
    match p {
        Pauli::I => Operator::identity(1),
        Pauli::X => gates::x().operator().clone(),
        Pauli::Y => gates::y().operator().clone(),
        Pauli::Z => gates::z().operator().clone(),
    }
}

fn dephase(rho: &DensityMatrix, q: usize, lambda: f64) -> DensityMatrix {
    if lambda == 0.0 {
        return rho.clone();
    }
    let mask = qubit_mask(rho.n_qubits(), q);
    let keep = 1.0 - lambda;
    rho.map_entries(|i, j, z| if (i ^ j) & mask != 0 { z * keep } else { z })
}

fn depolarize(rho: &DensityMatrix, targets: &[usize], p: f64) -> DensityMatrix {
    if p == 0.0 {
        return rho.clone();
    }
    let map = TargetMap::new(rho.n_qubits(), targets);
    let ld = map.local_dim();
    let inv = 1.0 / ld as f64;
    rho.map_entries(|i, j, z| {
        let mut out = z * (1.0 - p);
        if map.local(i) == map.local(j) {
            let (ri, rj) = (map.rest(i), map.rest(j));
            let traced: C64 = (0..ld)
                .map(|l| rho.get(map.compose(ri, l), map.compose(rj, l)))
                .sum();
            out += traced * (p * inv);
        }
        out
    })
}

/// Single-qubit dephasing of strength `lambda`.
pub fn dephasing_channel(lambda: f64) -> Result<Channel> {
    check_closed("lambda", lambda, 0.0, 1.0, "lambda in [0,1]")?;
    Ok(Channel::Dephasing { lambda })
}

/// Depolarizing channel on one or two qubits.
pub fn depolarizing_channel(p: f64, n_qubits: usize) -> Result<Channel> {
    check_closed("p", p, 0.0, 1.0, "p in [0,1]")?;
    if !(1..=2).contains(&n_qubits) {
        return Err(Error::Invalid(format!(
            "depolarizing channel acts on 1 or 2 qubits, not {n_qubits}"
        )));
    }
    Ok(Channel::Depolarizing { p, n_qubits })
}

/// Dephasing strength accumulated over `n_attempts` entangling attempts:
/// `1 - exp(-(n / N0)^k)`.
pub fn memory_storage_decay(n_attempts: u64, p: &NodeNoiseParams) -> f64 {
    if n_attempts == 0 || p.memory_one_over_e_attempts.is_infinite() {
        return 0.0;
    }
    let x = n_attempts as f64 / p.memory_one_over_e_attempts;
    -(-x.powf(p.decay_exponent)).exp_m1()
}

/// Gaussian free-induction decay over `elapsed` seconds.
pub fn free_evolution_decay(elapsed: f64, t2_star: f64) -> f64 {
    let x = elapsed / t2_star;
    -(-x * x).exp_m1()
}

/// Reported readout given the true `outcome`; flips with probability
/// `1 - readout_fid_<outcome>`.
pub fn readout_error<R: Rng + ?Sized>(outcome: u8, p: &NodeNoiseParams, rng: &mut R) -> u8 {
    let fid = if outcome == 0 {
        p.readout_fid_0
    } else {
        p.readout_fid_1
    };
    if fid >= 1.0 {
        return outcome;
    }
    if rng.random::<f64>() < fid {
        outcome
    } else {
        1 - outcome
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceFactor {
    /// Multiplier on the `|01><10|` coherence of a raw state.
    pub magnitude: f64,
    /// Extra phase added to the raw state's internal phase, rad.
    pub phase_jitter: f64,
}

/// Draws the coherence factor for one heralded raw state.
pub fn raw_state_coherence_factor<R: Rng + ?Sized>(
    p: &PhotonicNoiseParams,
    rng: &mut R,
) -> CoherenceFactor {
    let phase_jitter = if p.phase_drift_sigma > 0.0 {
        Normal::new(0.0, p.phase_drift_sigma)
            .expect("sigma validated")
            .sample(rng)
    } else {
        0.0
    };
    CoherenceFactor {
        magnitude: p.visibility,
        phase_jitter,
    }
}
