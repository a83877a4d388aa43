use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;

use crate::channels::raw_state_coherence_factor;
use crate::error::{Error, Result};
use crate::qstate::{c, DensityMatrix, PureState};

use super::{DetectorSign, ProtocolConfig};

/// `sin(theta)|0> - i cos(theta)|1>`. Accepts `theta` in (0, pi/2].
pub fn prepare_theta(theta: f64) -> Result<PureState> {
    if !(theta > 0.0 && theta <= FRAC_PI_2) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            invariant: "theta in (0, pi/2]",
        });
    }
    PureState::new(vec![c(theta.sin(), 0.0), c(0.0, -theta.cos())])
}

/// Optical path phase between the two emitters and the beam splitter.
/// Constant within one protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEnvironment {
    phi: f64,
}

impl PhaseEnvironment {
    pub fn new(phi: f64) -> Self {
        Self {
            phi: phi.rem_euclid(2.0 * PI),
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(rng.random::<f64>() * 2.0 * PI)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Heralded raw state on (comm A, comm B):
/// `cos^2(theta) |Psi> <Psi| + sin^2(theta) |00><00|` with
/// `|Psi> = (|01> + sign e^{i phase} |10>) / sqrt 2`, the `|01><10|` coherence
/// scaled by `coherence`, and a `dark` fraction of `|11><11|` mixed in.
pub fn raw_state(theta: f64, sign: DetectorSign, phase: f64, coherence: f64, dark: f64) -> DensityMatrix {
    let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
    let bright = 1.0 - dark;
    let mut e = vec![c(0.0, 0.0); 16];
    e[0] = c(bright * s2, 0.0);
    e[5] = c(bright * c2 * 0.5, 0.0);
    e[10] = c(bright * c2 * 0.5, 0.0);
    // <01|rho|10> = (1/2) conj(sign e^{i phase})
    let coh = num_complex::Complex64::from_polar(bright * c2 * 0.5 * coherence * sign.value(), -phase);
    e[6] = coh;
    e[9] = coh.conj();
    e[15] = c(dark, 0.0);
    DensityMatrix::from_raw(2, e)
}

/// Draws one heralded raw state for `cfg`, including visibility, per-state
/// phase jitter and dark-count admixture.
pub fn generate_raw_state<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    env: &PhaseEnvironment,
    sign: DetectorSign,
    rng: &mut R,
) -> DensityMatrix {
    let factor = raw_state_coherence_factor(&cfg.photonics, rng);
    raw_state(
        cfg.theta,
        sign,
        env.phi() + factor.phase_jitter,
        factor.magnitude,
        cfg.photonics.dark_count_fraction,
    )
}
