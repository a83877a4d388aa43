use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    aligned_memory_state, average_state, ebit_rate, tomography_sample, BellTarget, Bootstrap,
    Correlators, Estimate, RateEstimate, Shots, TomographyEstimate,
};
use crate::error::Result;
use crate::protocol::{TrialRecord, TrialStage};

/// Per-point summary of a trial ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PointAggregate {
    /// Sweep coordinate: theta (rad), p_det, n2_max, or 0/1 for feedback.
    pub value: f64,
    pub trials: usize,
    /// Trials in which both raw states were generated.
    pub events: usize,
    pub heralded: usize,
    pub total_time: f64,
    /// Both-copies-generated events per second.
    pub event_rate: Estimate,
    /// Heralded distillations per second.
    pub herald_rate: Estimate,
    /// Correlators of the mean aligned heralded state (target `|Psi+>`).
    pub correlators: Option<TomographyEstimate>,
    pub fidelity: Option<Estimate>,
    pub rate: Option<RateEstimate>,
}

/// Ratio estimate `sum(a) / sum(t)` with its delta-method standard error.
pub fn ratio_estimate(counts: &[f64], times: &[f64]) -> Estimate {
    let n = counts.len() as f64;
    let total_t: f64 = times.iter().sum();
    let value = counts.iter().sum::<f64>() / total_t;
    if counts.len() < 2 {
        return Estimate {
            value,
            stderr: f64::NAN,
        };
    }
    let mean_t = total_t / n;
    let var: f64 = counts
        .iter()
        .zip(times)
        .map(|(a, t)| (a - value * t).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Estimate {
        value,
        stderr: (var / n).sqrt() / mean_t,
    }
}

fn mean_with_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let value = xs.iter().sum::<f64>() / n;
    let stderr = if xs.len() < 2 {
        f64::NAN
    } else {
        (xs.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    };
    Estimate { value, stderr }
}

/// Summarizes one point. `seed` drives the bootstrap and, with
/// `shots_per_basis`, the simulated tomography of the mean state.
pub fn aggregate(
    value: f64,
    trials: &[TrialRecord],
    shots_per_basis: Option<u64>,
    bootstrap_resamples: usize,
    seed: u64,
) -> Result<PointAggregate> {
    let times: Vec<f64> = trials.iter().map(|t| t.elapsed_time).collect();
    let event_flags: Vec<f64> = trials
        .iter()
        .map(|t| f64::from(u8::from(matches!(t.stage, TrialStage::Heralded | TrialStage::Rejected))))
        .collect();
    let herald_flags: Vec<f64> = trials.iter().map(|t| f64::from(u8::from(t.heralded))).collect();
    let events = event_flags.iter().filter(|&&f| f > 0.0).count();

    let mut aligned = Vec::new();
    for rec in trials {
        if let Some(rho) = aligned_memory_state(rec)? {
            aligned.push(rho);
        }
    }
    let heralded = aligned.len();

    let (correlators, fidelity, rate) = if heralded == 0 {
        (None, None, None)
    } else {
        let mean = average_state(aligned.iter())?;
        let per: Vec<Correlators> = aligned.iter().map(Correlators::of).collect::<Result<_>>()?;
        let tomo = match shots_per_basis {
            Some(shots) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                tomography_sample(&mean, Shots::Finite(shots), &mut rng)?
            }
            None => TomographyEstimate {
                xx: mean_with_stderr(&per.iter().map(|c| c.xx).collect::<Vec<_>>()),
                yy: mean_with_stderr(&per.iter().map(|c| c.yy).collect::<Vec<_>>()),
                zz: mean_with_stderr(&per.iter().map(|c| c.zz).collect::<Vec<_>>()),
            },
        };
        let fidelity = match shots_per_basis {
            Some(_) => tomo.fidelity(BellTarget::PsiPlus)?,
            None => {
                let fs: Vec<f64> = per
                    .iter()
                    .map(|c| c.bell_fidelity(BellTarget::PsiPlus))
                    .collect::<Result<_>>()?;
                mean_with_stderr(&fs)
            }
        };
        let rate = ebit_rate(
            trials,
            &mean,
            Bootstrap {
                resamples: bootstrap_resamples,
                seed,
            },
        )?;
        (Some(tomo), Some(fidelity), Some(rate))
    };

    Ok(PointAggregate {
        value,
        trials: trials.len(),
        events,
        heralded,
        total_time: times.iter().sum(),
        event_rate: ratio_estimate(&event_flags, &times),
        herald_rate: ratio_estimate(&herald_flags, &times),
        correlators,
        fidelity,
        rate,
    })
}
