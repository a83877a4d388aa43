//! Weighted nonlinear least squares for the decay and oscillation curves.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// One-sigma errors from the covariance `(J^T J)^-1`. With point errors
    /// it is scaled by the reduced chi-square when that exceeds one; without,
    /// the residual scatter sets the scale.
    pub stderr: Vec<f64>,
    pub chi2_reduced: f64,
}

struct Problem<'a, M> {
    x: &'a [f64],
    y: &'a [f64],
    inv_sigma: Vec<f64>,
    model: M,
    p: DVector<f64>,
}

impl<M: Fn(&[f64], f64) -> f64> Problem<'_, M> {
    fn residual_vec(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(&self.inv_sigma)
                .map(|((&x, &y), &w)| w * ((self.model)(p, x) - y)),
        )
    }

    fn jacobian_mat(&self) -> DMatrix<f64> {
        let p: Vec<f64> = self.p.iter().copied().collect();
        let mut jac = DMatrix::zeros(self.x.len(), p.len());
        for k in 0..p.len() {
            let h = 1e-7 * p[k].abs().max(1e-3);
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[k] += h;
            lo[k] -= h;
            let col = (self.residual_vec(&hi) - self.residual_vec(&lo)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        jac
    }
}

impl<M: Fn(&[f64], f64) -> f64> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, M> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residual_vec(self.p.as_slice());
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let j = self.jacobian_mat();
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Fits `model(params, x)` to `(x, y)` with optional per-point errors.
pub fn fit_curve<M>(x: &[f64], y: &[f64], sigma: Option<&[f64]>, p0: &[f64], model: M) -> Result<FitResult>
where
    M: Fn(&[f64], f64) -> f64,
{
    if x.len() != y.len() || sigma.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::Invalid("fit: x, y and sigma lengths differ".into()));
    }
    if x.len() < p0.len() {
        return Err(Error::Invalid(format!(
            "fit: {} points cannot constrain {} parameters",
            x.len(),
            p0.len()
        )));
    }
    let inv_sigma = match sigma {
        Some(s) => s
            .iter()
            .map(|&s| {
                if s > 0.0 && s.is_finite() {
                    Ok(1.0 / s)
                } else {
                    Err(Error::Invalid(format!("fit: point error {s} must be positive")))
                }
            })
            .collect::<Result<_>>()?,
        None => vec![1.0; x.len()],
    };
    let problem = Problem {
        x,
        y,
        inv_sigma,
        model,
        p: DVector::from_column_slice(p0),
    };
    let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
    if !report.termination.was_successful() {
        return Err(Error::Invalid(format!("fit did not converge: {:?}", report.termination)));
    }
    let dof = x.len().saturating_sub(p0.len());
    let chi2 = problem.residual_vec(problem.p.as_slice()).norm_squared();
    let chi2_reduced = if dof > 0 { chi2 / dof as f64 } else { f64::NAN };
    let jac = problem.jacobian_mat();
    let scale = match (chi2_reduced.is_finite(), sigma.is_some()) {
        (false, _) => 1.0,
        (true, true) => chi2_reduced.max(1.0),
        (true, false) => chi2_reduced,
    };
    let stderr = match (jac.transpose() * &jac).try_inverse() {
        Some(cov) => (0..p0.len()).map(|k| (cov[(k, k)] * scale).sqrt()).collect(),
        None => vec![f64::NAN; p0.len()],
    };
    Ok(FitResult {
        params: problem.p.iter().copied().collect(),
        stderr,
        chi2_reduced,
    })
}

/// `offset + amplitude * exp(-(x / tau)^beta)` with fixed offset and exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    pub tau: f64,
    pub tau_stderr: f64,
}

pub fn fit_decay(x: &[f64], y: &[f64], sigma: Option<&[f64]>, offset: f64, beta: f64) -> Result<DecayFit> {
    // log-linear start on the points above the offset
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(_, &y)| y - offset > 1e-6)
        .map(|(&x, &y)| (x.max(0.0).powf(beta), (y - offset).ln()))
        .collect();
    let (a0, tau0) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        let (mx, my) = (sx / n, sy / n);
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let tau = if slope < 0.0 {
            (-1.0 / slope).powf(1.0 / beta)
        } else {
            x.iter().cloned().fold(1.0, f64::max)
        };
        ((my - slope * mx).exp(), tau)
    } else {
        (y.first().map_or(1.0, |y0| y0 - offset), 1.0)
    };
    let fit = fit_curve(x, y, sigma, &[a0, tau0], |p, x| {
        offset + p[0] * (-(x.max(0.0) / p[1]).powf(beta)).exp()
    })?;
    Ok(DecayFit {
        amplitude: fit.params[0],
        tau: fit.params[1],
        tau_stderr: fit.stderr[1],
    })
}

/// `amplitude * cos(frequency x + phase) * exp(-rate x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedCosineFit {
    pub amplitude: f64,
    /// rad per unit of `x`, in (0, pi].
    pub frequency: f64,
    pub frequency_stderr: f64,
    pub phase: f64,
    /// Exponential decay rate; `1 / rate` is the 1/e constant.
    pub rate: f64,
}

pub fn fit_damped_cosine(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<DampedCosineFit> {
    if x.len() < 4 {
        return Err(Error::Invalid("fit: damped cosine needs at least 4 points".into()));
    }
    // periodogram start for the frequency
    let grid = 4000;
    let (mut best_w, mut best_pow, mut best_phase) = (0.0, -1.0, 0.0);
    for k in 1..=grid {
        let w = std::f64::consts::PI * k as f64 / grid as f64;
        let (re, im) = x.iter().zip(y).fold((0.0, 0.0), |acc, (&x, &y)| {
            (acc.0 + y * (w * x).cos(), acc.1 - y * (w * x).sin())
        });
        let pow = re * re + im * im;
        if pow > best_pow {
            (best_w, best_pow, best_phase) = (w, pow, im.atan2(re));
        }
    }
    let amp0 = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let span = x.iter().cloned().fold(f64::MIN, f64::max) - x.iter().cloned().fold(f64::MAX, f64::min);
    let fit = fit_curve(x, y, sigma, &[amp0, best_w, best_phase, 1.0 / span.max(1.0)], |p, x| {
        p[0] * (p[1] * x + p[2]).cos() * (-p[3] * x).exp()
    })?;
    let (mut amplitude, mut frequency, mut phase) = (fit.params[0], fit.params[1], fit.params[2]);
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += std::f64::consts::PI;
    }
    if frequency < 0.0 {
        frequency = -frequency;
        phase = -phase;
    }
    Ok(DampedCosineFit {
        amplitude,
        frequency,
        frequency_stderr: fit.stderr[1],
        phase: phase.rem_euclid(2.0 * std::f64::consts::PI),
        rate: fit.params[3],
    })
}
