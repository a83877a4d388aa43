use crate::error::{Error, Result};
use crate::protocol::TrialRecord;

use super::metrics::{aligned_memory_state, BellTarget, Correlators};
use super::tomography::Estimate;

/// Heralded-state statistics of one bin of second-round attempt counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Bin {
    /// Attempt counts in `[lo, hi)`.
    pub lo: u64,
    pub hi: u64,
    pub count: usize,
    /// `None` for an empty bin.
    pub stats: Option<BinStats>,
}

/// Means over the aligned heralded states of a bin (target `|Psi+>`), with
/// standard errors of the mean. A single-trial bin has NaN errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStats {
    pub xx: Estimate,
    pub yy: Estimate,
    pub zz: Estimate,
    pub fidelity: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedCurve {
    pub bin_edges: Vec<u64>,
    pub bins: Vec<Bin>,
}

impl BinnedCurve {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Bin centres and fidelity estimates of the occupied bins.
    pub fn occupied(&self) -> impl Iterator<Item = (f64, &BinStats)> {
        self.bins.iter().filter_map(|b| {
            b.stats
                .as_ref()
                .map(|s| ((b.lo + b.hi - 1) as f64 / 2.0, s))
        })
    }
}

fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let value = xs.iter().sum::<f64>() / n;
    let stderr = if xs.len() < 2 {
        f64::NAN
    } else {
        (xs.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    };
    Estimate { value, stderr }
}

/// Groups heralded trials by second-round attempt count into bins of
/// `bin_width` starting at one attempt.
pub fn bin_by_attempts(trials: &[TrialRecord], bin_width: u64) -> Result<BinnedCurve> {
    if bin_width == 0 {
        return Err(Error::OutOfRange {
            name: "bin_width",
            value: 0.0,
            invariant: "bin_width >= 1",
        });
    }
    let mut heralded = Vec::new();
    for rec in trials {
        if let Some(rho) = aligned_memory_state(rec)? {
            heralded.push((rec.n2, Correlators::of(&rho)?));
        }
    }
    let Some(max_n) = heralded.iter().map(|h| h.0).max() else {
        return Err(Error::NoHeraldedEvents);
    };
    let n_bins = ((max_n - 1) / bin_width + 1) as usize;
    let mut grouped: Vec<Vec<Correlators>> = vec![Vec::new(); n_bins];
    for (n, c) in heralded {
        grouped[((n.max(1) - 1) / bin_width) as usize].push(c);
    }
    let bin_edges: Vec<u64> = (0..=n_bins as u64).map(|k| 1 + k * bin_width).collect();
    let bins = grouped
        .into_iter()
        .enumerate()
        .map(|(k, cs)| {
            let stats = if cs.is_empty() {
                None
            } else {
                let pick = |f: fn(&Correlators) -> f64| cs.iter().map(f).collect::<Vec<_>>();
                let fid: Vec<f64> = cs
                    .iter()
                    .map(|c| c.bell_fidelity(BellTarget::PsiPlus))
                    .collect::<Result<_>>()?;
                Some(BinStats {
                    xx: mean_estimate(&pick(|c| c.xx)),
                    yy: mean_estimate(&pick(|c| c.yy)),
                    zz: mean_estimate(&pick(|c| c.zz)),
                    fidelity: mean_estimate(&fid),
                })
            };
            Ok(Bin {
                lo: bin_edges[k],
                hi: bin_edges[k + 1],
                count: cs.len(),
                stats,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BinnedCurve { bin_edges, bins })
}
