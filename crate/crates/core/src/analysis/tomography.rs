use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qstate::DensityMatrix;

use super::metrics::{BellTarget, Correlators};

/// Number of measurement shots per correlator basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    /// Infinite-shot limit: exact expectation values, zero error.
    Exact,
    Finite(u64),
}

/// A sampled quantity with its one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyEstimate {
    pub xx: Estimate,
    pub yy: Estimate,
    pub zz: Estimate,
}

impl TomographyEstimate {
    pub fn correlators(&self) -> Correlators {
        Correlators {
            xx: self.xx.value,
            yy: self.yy.value,
            zz: self.zz.value,
        }
    }

    /// Bell fidelity with the correlator errors propagated in quadrature.
    pub fn fidelity(&self, target: BellTarget) -> Result<Estimate> {
        let value = self.correlators().bell_fidelity(target)?;
        let stderr =
            (self.xx.stderr.powi(2) + self.yy.stderr.powi(2) + self.zz.stderr.powi(2)).sqrt() / 4.0;
        Ok(Estimate { value, stderr })
    }
}

/// Standard error of a +-1-valued correlator with mean `e` over `shots`.
pub fn correlator_stderr(e: f64, shots: u64) -> f64 {
    ((1.0 - e * e).max(0.0) / shots as f64).sqrt()
}

fn sample_correlator<R: Rng + ?Sized>(e: f64, shots: u64, rng: &mut R) -> Result<Estimate> {
    let p_plus = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p_plus)
        .map_err(|err| Error::Invalid(format!("binomial sampling: {err}")))?
        .sample(rng);
    let value = 2.0 * k as f64 / shots as f64 - 1.0;
    Ok(Estimate {
        value,
        stderr: correlator_stderr(value, shots),
    })
}

/// Simulated tomography of the three diagonal correlators: each basis is
/// measured `shots` times and the +-1 outcomes averaged.
pub fn tomography_sample<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    shots: Shots,
    rng: &mut R,
) -> Result<TomographyEstimate> {
    let exact = Correlators::of(rho)?;
    let est = |e: f64, rng: &mut R| match shots {
        Shots::Exact => Ok(Estimate { value: e, stderr: 0.0 }),
        Shots::Finite(0) => Err(Error::OutOfRange {
            name: "shots_per_basis",
            value: 0.0,
            invariant: "shots >= 1",
        }),
        Shots::Finite(n) => sample_correlator(e, n, rng),
    };
    Ok(TomographyEstimate {
        xx: est(exact.xx, rng)?,
        yy: est(exact.yy, rng)?,
        zz: est(exact.zz, rng)?,
    })
}
