//! Fast self-checks of the simulator against closed-form results, run by the
//! `validate` command on the loaded configuration.

use std::f64::consts::PI;

use distill_core::analysis::{aligned_memory_state, log_negativity, BellTarget};
use distill_core::channels::NodeNoiseParams;
use distill_core::montecarlo::{
    calibrate_gate_error, run_figure_sweep, run_trials, AnalysisOptions, ExperimentSpec, SweepAxis,
};
use distill_core::protocol::{
    benchmark_fidelity, store_qubit, ProtocolConfig, SignaturePolicy, StorageOptions,
};
use distill_core::qstate::{DensityMatrix, Pauli, PureState};

pub struct CheckResult {
    pub name: &'static str,
    /// Detail on success, reason on failure.
    pub outcome: Result<String, String>,
}

type Check = fn(&ExperimentSpec) -> Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn config_points(spec: &ExperimentSpec) -> Result<String, String> {
    spec.validate().map_err(err)?;
    Ok(format!("{} sweep points valid", spec.points().len()))
}

fn gate_calibration(spec: &ExperimentSpec) -> Result<String, String> {
    let p = &spec.protocol;
    let targets = [benchmark_fidelity(p.node_a.local_gate_error).map_err(err)?,
        benchmark_fidelity(p.node_b.local_gate_error).map_err(err)?];
    let back = calibrate_gate_error(targets).map_err(err)?;
    for (got, want) in back.iter().zip([p.node_a.local_gate_error, p.node_b.local_gate_error]) {
        if (got - want).abs() > 1e-9 {
            return Err(format!("calibration inverts to {got}, configured {want}"));
        }
    }
    Ok(format!("benchmark fidelities {:.4} / {:.4} invert", targets[0], targets[1]))
}

fn ideal_limit(_: &ExperimentSpec) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut heralds = 0;
    for theta in [PI / 10.0, PI / 8.0, PI / 6.0, PI / 4.0] {
        for policy in [SignaturePolicy::Plus, SignaturePolicy::Minus, SignaturePolicy::Both] {
            let cfg = ProtocolConfig {
                p_det: 1.0,
                n2_max: 3,
                signature_policy: policy,
                ..ProtocolConfig::ideal(theta)
            };
            for rec in run_trials(&cfg, 64, 7).map_err(err)? {
                if let Some(rho) = aligned_memory_state(&rec).map_err(err)? {
                    heralds += 1;
                    let f = rho.fidelity_with_pure(&BellTarget::PsiPlus.state()).map_err(err)?;
                    worst = worst.max((f - 1.0).abs());
                }
            }
        }
    }
    if heralds == 0 || worst > 1e-9 {
        return Err(format!("{heralds} heralds, worst |F - 1| = {worst:e}"));
    }
    Ok(format!("{heralds} heralded states, worst |F - 1| = {worst:.1e}"))
}

fn branch_table(spec: &ExperimentSpec) -> Result<String, String> {
    let theta = spec.protocol.theta;
    let cfg = ProtocolConfig {
        p_det: 1.0,
        n1_max: 10_000,
        n2_max: 10_000,
        ..ProtocolConfig::ideal(theta)
    };
    let n = 4000;
    let recs = run_trials(&cfg, n, 11).map_err(err)?;
    let (s2, c2) = (theta.sin().powi(2), theta.cos().powi(2));
    let expect = [c2 * c2 / 2.0, s2 * c2, s2 * c2, s2 * s2 + c2 * c2 / 2.0];
    let mut counts = [0usize; 4];
    for r in &recs {
        if let Some((a, b)) = r.readouts {
            counts[(2 * a + b) as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    for (k, (&c, &p)) in counts.iter().zip(&expect).enumerate() {
        let sigma = (p * (1.0 - p) / total as f64).sqrt();
        let f = c as f64 / total as f64;
        if (f - p).abs() > 4.0 * sigma {
            return Err(format!("branch {k}: frequency {f:.4}, expected {p:.4}"));
        }
    }
    Ok(format!("{total} readouts match the four-branch table"))
}

fn bell_negativity(_: &ExperimentSpec) -> Result<String, String> {
    let bell = log_negativity(&DensityMatrix::from_pure(&PureState::psi(1.0, 0.0))).map_err(err)?;
    let product = log_negativity(&DensityMatrix::basis(2, 1).map_err(err)?).map_err(err)?;
    if (bell - 1.0).abs() > 1e-12 || product != 0.0 {
        return Err(format!("E_N(Bell) = {bell}, E_N(product) = {product}"));
    }
    Ok("E_N = 1 for a Bell state, 0 for a product state".into())
}

fn feedback_cancels_phase(spec: &ExperimentSpec) -> Result<String, String> {
    let n = 37;
    for node in [&spec.protocol.node_a, &spec.protocol.node_b] {
        let params = NodeNoiseParams {
            memory_one_over_e_attempts: f64::INFINITY,
            t2_star_dephasing: false,
            ..node.clone()
        };
        let plus = DensityMatrix::from_pure(&PureState::plus_x());
        let x = |feedback| -> Result<f64, String> {
            let opts = StorageOptions {
                feedback,
                attempt_duration: spec.protocol.attempt_duration,
            };
            store_qubit(&plus, 0, n, &params, opts)
                .and_then(|r| r.pauli_expectation(&[Pauli::X]))
                .map_err(err)
        };
        let (with, without) = (x(true)?, x(false)?);
        let expect = (n as f64 * params.phi_per_attempt).cos();
        if (with - 1.0).abs() > 1e-12 || (without - expect).abs() > 1e-12 {
            return Err(format!("<X> = {with} with feedback, {without} without (expected {expect})"));
        }
    }
    Ok(format!("<X> restored after {n} attempts on both nodes"))
}

fn dephasing_constant(spec: &ExperimentSpec) -> Result<String, String> {
    for node in [&spec.protocol.node_a, &spec.protocol.node_b] {
        let n0 = node.memory_one_over_e_attempts;
        if !n0.is_finite() {
            continue;
        }
        let params = NodeNoiseParams {
            t2_star_dephasing: false,
            ..node.clone()
        };
        let plus = DensityMatrix::from_pure(&PureState::plus_x());
        let opts = StorageOptions {
            feedback: true,
            attempt_duration: spec.protocol.attempt_duration,
        };
        // the decay is evaluated at integer attempt counts
        let n = n0.round() as u64;
        let f = store_qubit(&plus, 0, n, &params, opts)
            .and_then(|r| r.fidelity_with_pure(&PureState::plus_x()))
            .map_err(err)?;
        let expect = 0.5 + 0.5 * (-(n as f64 / n0).powf(params.decay_exponent)).exp();
        if (f - expect).abs() > 1e-12 {
            return Err(format!("fidelity {f} after {n} attempts, expected {expect}"));
        }
    }
    Ok("superposition fidelity follows the configured decay".into())
}

fn determinism(spec: &ExperimentSpec) -> Result<String, String> {
    let small = ExperimentSpec {
        axis: SweepAxis::Single,
        trials: 200,
        analysis: AnalysisOptions {
            bootstrap_resamples: 10,
            ..spec.analysis
        },
        protocol: ProtocolConfig {
            p_det: spec.protocol.p_det.max(0.05),
            ..spec.protocol.clone()
        },
        ..spec.clone()
    };
    let a = run_figure_sweep(&small).map_err(err)?;
    let b = run_figure_sweep(&small).map_err(err)?;
    if a != b {
        return Err("two runs with the same seed differ".into());
    }
    Ok("repeated seeded run is identical".into())
}

pub fn run_invariant_suite(spec: &ExperimentSpec) -> Vec<CheckResult> {
    let checks: [(&'static str, Check); 8] = [
        ("config", config_points),
        ("gate_calibration", gate_calibration),
        ("ideal_limit", ideal_limit),
        ("branch_table", branch_table),
        ("log_negativity", bell_negativity),
        ("feedback", feedback_cancels_phase),
        ("memory_decay", dephasing_constant),
        ("determinism", determinism),
    ];
    checks
        .into_iter()
        .map(|(name, check)| CheckResult {
            name,
            outcome: check(spec),
        })
        .collect()
}
