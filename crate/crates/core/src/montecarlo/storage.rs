//! Single-node memory experiments, simulated independently of the
//! distillation circuit: prepare a memory state, store it for `n` attempts
//! (deterministic phase, optional feedback, dephasing) and read it back.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::analysis::fit::{fit_damped_cosine, fit_decay};
use crate::analysis::{Estimate, Shots};
use crate::channels::{memory_storage_decay, NodeNoiseParams};
use crate::error::{Error, Result};
use crate::protocol::{store_qubit, Node, StorageOptions};
use crate::qstate::{DensityMatrix, Pauli, PureState};

/// The six cardinal states of the Bloch sphere; the first four are
/// phase-sensitive superpositions, the last two energy eigenstates.
pub fn cardinal_states() -> [(&'static str, PureState); 6] {
    [
        ("+X", PureState::plus_x()),
        ("-X", PureState::minus_x()),
        ("+Y", PureState::plus_y()),
        ("-Y", PureState::minus_y()),
        ("+Z", PureState::zero()),
        ("-Z", PureState::one()),
    ]
}

fn sample_probability<R: Rng + ?Sized>(p: f64, shots: Shots, rng: &mut R) -> Result<Estimate> {
    match shots {
        Shots::Exact => Ok(Estimate { value: p, stderr: 0.0 }),
        Shots::Finite(0) => Err(Error::OutOfRange {
            name: "trials",
            value: 0.0,
            invariant: "trials >= 1",
        }),
        Shots::Finite(n) => {
            let k = Binomial::new(n, p.clamp(0.0, 1.0))
                .map_err(|e| Error::Invalid(format!("binomial sampling: {e}")))?
                .sample(rng);
            let value = k as f64 / n as f64;
            Ok(Estimate {
                value,
                stderr: (value * (1.0 - value) / n as f64).sqrt(),
            })
        }
    }
}

/// Fit weights from readout errors. A point read out with certainty has a
/// zero binomial error; it takes the smallest nonzero error instead. `None`
/// (unweighted) when every error is zero.
fn fit_sigma(errors: &[f64]) -> Option<Vec<f64>> {
    let floor = errors.iter().copied().filter(|&s| s > 0.0).fold(f64::INFINITY, f64::min);
    floor.is_finite().then(|| errors.iter().map(|&s| s.max(floor)).collect())
}

fn mean_of(estimates: &[Estimate]) -> Estimate {
    let n = estimates.len() as f64;
    Estimate {
        value: estimates.iter().map(|e| e.value).sum::<f64>() / n,
        stderr: estimates.iter().map(|e| e.stderr.powi(2)).sum::<f64>().sqrt() / n,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoragePoint {
    pub node: Node,
    pub attempts: u64,
    /// Average over the four superposition states.
    pub superposition_fidelity: Estimate,
    /// Average over the two eigenstates.
    pub eigenstate_fidelity: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageFit {
    pub node: Node,
    /// Fitted 1/e attempt constant of the superposition fidelity.
    pub one_over_e_attempts: f64,
    pub stderr: f64,
    pub configured: f64,
}

/// Memory lifetime: fidelity of each cardinal state after `n` attempts,
/// read out with `shots` per state.
pub fn memory_lifetime<R: Rng + ?Sized>(
    node: Node,
    params: &NodeNoiseParams,
    opts: StorageOptions,
    attempts: &[u64],
    shots: Shots,
    rng: &mut R,
) -> Result<Vec<StoragePoint>> {
    let mut out = Vec::with_capacity(attempts.len());
    for &n in attempts {
        let mut fids = Vec::with_capacity(6);
        for (_, psi) in cardinal_states() {
            let rho = store_qubit(&DensityMatrix::from_pure(&psi), 0, n, params, opts)?;
            fids.push(sample_probability(rho.fidelity_with_pure(&psi)?, shots, rng)?);
        }
        out.push(StoragePoint {
            node,
            attempts: n,
            superposition_fidelity: mean_of(&fids[..4]),
            eigenstate_fidelity: mean_of(&fids[4..]),
        });
    }
    Ok(out)
}

/// Fits `1/2 + A exp(-(n / N0)^beta)` to the superposition fidelities, with
/// `beta` taken from the node parameters.
pub fn fit_memory_lifetime(points: &[StoragePoint], params: &NodeNoiseParams) -> Result<StorageFit> {
    let node = points
        .first()
        .map(|p| p.node)
        .ok_or_else(|| Error::Invalid("memory lifetime fit needs points".into()))?;
    let x: Vec<f64> = points.iter().map(|p| p.attempts as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.superposition_fidelity.value).collect();
    let s: Vec<f64> = points.iter().map(|p| p.superposition_fidelity.stderr).collect();
    let sigma = fit_sigma(&s);
    let fit = fit_decay(&x, &y, sigma.as_deref(), 0.5, params.decay_exponent)?;
    Ok(StorageFit {
        node,
        one_over_e_attempts: fit.tau,
        stderr: fit.tau_stderr,
        configured: params.memory_one_over_e_attempts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationPoint {
    pub node: Node,
    pub attempts: u64,
    pub x_feedback: Estimate,
    pub x_no_feedback: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationFit {
    pub node: Node,
    /// Fitted phase per attempt without feedback, rad.
    pub frequency: f64,
    pub frequency_stderr: f64,
    pub configured: f64,
    /// Largest deviation of the fed-back `<X>` from the pure dephasing
    /// envelope `1 - lambda(n)`.
    pub residual_with_feedback: f64,
}

/// `<X>` of a memory prepared in `|+X>` after `n` attempts, with and without
/// the feedback rotation.
pub fn feedback_oscillation<R: Rng + ?Sized>(
    node: Node,
    params: &NodeNoiseParams,
    attempt_duration: f64,
    attempts: &[u64],
    shots: Shots,
    rng: &mut R,
) -> Result<Vec<OscillationPoint>> {
    let plus = DensityMatrix::from_pure(&PureState::plus_x());
    let mut out = Vec::with_capacity(attempts.len());
    for &n in attempts {
        let mut x = |feedback| -> Result<Estimate> {
            let opts = StorageOptions {
                feedback,
                attempt_duration,
            };
            let e = store_qubit(&plus, 0, n, params, opts)?.pauli_expectation(&[Pauli::X])?;
            let p = sample_probability((1.0 + e) / 2.0, shots, rng)?;
            Ok(Estimate {
                value: 2.0 * p.value - 1.0,
                stderr: 2.0 * p.stderr,
            })
        };
        let x_feedback = x(true)?;
        let x_no_feedback = x(false)?;
        out.push(OscillationPoint {
            node,
            attempts: n,
            x_feedback,
            x_no_feedback,
        });
    }
    Ok(out)
}

pub fn fit_oscillation(points: &[OscillationPoint], params: &NodeNoiseParams) -> Result<OscillationFit> {
    let node = points
        .first()
        .map(|p| p.node)
        .ok_or_else(|| Error::Invalid("oscillation fit needs points".into()))?;
    let x: Vec<f64> = points.iter().map(|p| p.attempts as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.x_no_feedback.value).collect();
    let s: Vec<f64> = points.iter().map(|p| p.x_no_feedback.stderr).collect();
    let sigma = fit_sigma(&s);
    let fit = fit_damped_cosine(&x, &y, sigma.as_deref())?;
    let residual_with_feedback = points
        .iter()
        .map(|p| (p.x_feedback.value - (1.0 - memory_storage_decay(p.attempts, params))).abs())
        .fold(0.0, f64::max);
    Ok(OscillationFit {
        node,
        frequency: fit.frequency,
        frequency_stderr: fit.frequency_stderr,
        configured: params.phi_per_attempt.rem_euclid(2.0 * std::f64::consts::PI),
        residual_with_feedback,
    })
}
