use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::PhotonicNoiseParams;
use crate::error::{Error, Result};
use crate::protocol::TrialRecord;
use crate::qstate::DensityMatrix;

use super::metrics::{aligned_memory_state, average_state, log_negativity};

/// Success rate, entanglement per success and their product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Successes per second.
    pub nu: f64,
    pub nu_stderr: f64,
    /// Logarithmic negativity of the delivered state.
    pub e_n: f64,
    pub e_n_stderr: f64,
    /// Ebits per second, `nu * e_n`.
    pub r: f64,
    pub r_stderr: f64,
}

impl RateEstimate {
    /// Exact estimate with no statistical error.
    pub fn exact(nu: f64, e_n: f64) -> Self {
        Self {
            nu,
            nu_stderr: 0.0,
            e_n,
            e_n_stderr: 0.0,
            r: nu * e_n,
            r_stderr: 0.0,
        }
    }
}

/// Bootstrap settings; `resamples = 0` skips the bootstrap and reports
/// NaN standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bootstrap {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Self {
            resamples: 1000,
            seed: 0,
        }
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Ebit rate of a trial ensemble: `nu` is the heralded count over the total
/// elapsed time, `e_n` the log negativity of `mean_state` (normally
/// [`super::mean_heralded_state`] of the same trials). Errors come from
/// resampling trials, recomputing both the rate and the mean state.
pub fn ebit_rate(trials: &[TrialRecord], mean_state: &DensityMatrix, bootstrap: Bootstrap) -> Result<RateEstimate> {
    if trials.is_empty() {
        return Err(Error::Invalid("ebit rate needs at least one trial".into()));
    }
    let aligned: Vec<Option<DensityMatrix>> = trials
        .iter()
        .map(aligned_memory_state)
        .collect::<Result<_>>()?;
    let heralded = aligned.iter().filter(|a| a.is_some()).count();
    if heralded == 0 {
        return Err(Error::NoHeraldedEvents);
    }
    let total_time: f64 = trials.iter().map(|t| t.elapsed_time).sum();
    let nu = heralded as f64 / total_time;
    let e_n = log_negativity(mean_state)?;

    let samples: Vec<(f64, f64)> = (0..bootstrap.resamples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(bootstrap.seed);
            rng.set_stream(k as u64);
            let mut time = 0.0;
            let mut states = Vec::new();
            for _ in 0..trials.len() {
                let i = rng.random_range(0..trials.len());
                time += trials[i].elapsed_time;
                if let Some(rho) = &aligned[i] {
                    states.push(rho);
                }
            }
            let nu_b = states.len() as f64 / time;
            let e_b = match average_state(states.iter().copied()) {
                Ok(mean) => log_negativity(&mean)?,
                Err(_) => 0.0,
            };
            Ok((nu_b, e_b))
        })
        .collect::<Result<_>>()?;
    let nus: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ens: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let rs: Vec<f64> = samples.iter().map(|s| s.0 * s.1).collect();
    Ok(RateEstimate {
        nu,
        nu_stderr: std_dev(&nus),
        e_n,
        e_n_stderr: std_dev(&ens),
        r: nu * e_n,
        r_stderr: std_dev(&rs),
    })
}

/// Analytic two-photon-coincidence (Barrett-Kok) rate. A round is two
/// consecutive attempts and succeeds with `p_det^2 / 2`. With `photonics`
/// the delivered state has coherence scaled by the visibility, giving
/// `E_N = log2(1 + V)`; without it the state is a perfect Bell pair.
pub fn barrett_kok_rate(
    p_det: f64,
    photonics: Option<&PhotonicNoiseParams>,
    attempt_duration: f64,
) -> Result<RateEstimate> {
    if !(p_det > 0.0 && p_det <= 1.0) {
        return Err(Error::OutOfRange {
            name: "p_det",
            value: p_det,
            invariant: "p_det in (0, 1]",
        });
    }
    if !(attempt_duration > 0.0) {
        return Err(Error::OutOfRange {
            name: "attempt_duration",
            value: attempt_duration,
            invariant: "attempt_duration > 0",
        });
    }
    let e_n = match photonics {
        None => 1.0,
        Some(p) => {
            p.validate()?;
            (1.0 + p.visibility).log2()
        }
    };
    let nu = barrett_kok_success_probability(p_det) / (2.0 * attempt_duration);
    Ok(RateEstimate::exact(nu, e_n))
}

pub fn barrett_kok_success_probability(p_det: f64) -> f64 {
    p_det * p_det / 2.0
}
