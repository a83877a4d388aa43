//! Acceptance suite: one PASS/FAIL line per criterion, run in sequence so
//! the runtime limits are measured without competing tests.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use distill_cli::{parse_and_dispatch, parse_config};
use distill_core::analysis::{bell_fidelity_from_paulis, log_negativity, BellTarget, Correlators};
use distill_core::montecarlo::{
    feedback_oscillation, fit_oscillation, loglog_slope, run_figure_sweep, run_trials, ExperimentSpec,
    ResultSet, SweepAxis,
};
use distill_core::analysis::{barrett_kok_rate, Shots};
use distill_core::channels::NodeNoiseParams;
use distill_core::protocol::{undo_memory_frame, Node, PairSign, ProtocolConfig, SignaturePolicy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// The shipped defaults, i.e. the calibrated operating point.
fn calibrated(trials: usize) -> ExperimentSpec {
    let (_, spec) = parse_config("", "<defaults>").expect("defaults are valid");
    ExperimentSpec { trials, ..spec }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    if t < limit {
        Ok(t)
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn ideal_limit() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut same, mut different) = (0.0f64, 0, 0);
    for theta in [PI / 10.0, PI / 8.0, PI / 6.0, PI / 4.0] {
        for policy in [SignaturePolicy::Plus, SignaturePolicy::Minus, SignaturePolicy::Both] {
            let cfg = ProtocolConfig {
                p_det: 1.0,
                signature_policy: policy,
                ..ProtocolConfig::ideal(theta)
            };
            for rec in run_trials(&cfg, 64, 1).map_err(|e| e.to_string())? {
                let (Some(rho), Some(sig)) = (&rec.final_memory_state, rec.signatures) else {
                    continue;
                };
                match sig.pair() {
                    PairSign::SameDetector => same += 1,
                    PairSign::DifferentDetector => different += 1,
                }
                let f = undo_memory_frame(rho)
                    .and_then(|r| r.fidelity_with_pure(&sig.target()))
                    .map_err(|e| e.to_string())?;
                worst = worst.max((f - 1.0).abs());
            }
        }
    }
    let t = within(Duration::from_secs(1), start)?;
    if same == 0 || different == 0 || worst > 1e-9 {
        return Err(format!("{same}/{different} same/different heralds, worst |F-1| = {worst:.1e}"));
    }
    Ok(format!("{} heralds (both signatures), worst |F-1| = {worst:.1e}, {t:.2?}", same + different))
}

fn branch_frequencies() -> Outcome {
    let start = Instant::now();
    let cfg = ProtocolConfig {
        p_det: 1.0,
        n1_max: 10_000,
        n2_max: 10_000,
        ..ProtocolConfig::ideal(PI / 6.0)
    };
    let n = 100_000;
    let mut counts = [0usize; 4];
    for rec in run_trials(&cfg, n, 2).map_err(|e| e.to_string())? {
        let (a, b) = rec.readouts.ok_or("trial ended before distillation")?;
        counts[(2 * a + b) as usize] += 1;
    }
    let t = within(Duration::from_secs(60), start)?;
    let expect = [9.0 / 32.0, 6.0 / 32.0, 6.0 / 32.0, 11.0 / 32.0];
    let mut worst: f64 = 0.0;
    for (&c, &p) in counts.iter().zip(&expect) {
        let z = (c as f64 / n as f64 - p) / (p * (1.0 - p) / n as f64).sqrt();
        worst = worst.max(z.abs());
    }
    if worst > 3.0 {
        return Err(format!("counts {counts:?}, worst deviation {worst:.2} sigma"));
    }
    Ok(format!("counts {counts:?}, worst deviation {worst:.2} sigma, {t:.1?}"))
}

fn calibrated_fidelity() -> Outcome {
    let start = Instant::now();
    let res = run_figure_sweep(&calibrated(100_000)).map_err(|e| e.to_string())?;
    let t = within(Duration::from_secs(300), start)?;
    let p = &res.points[0];
    let f = p.fidelity.ok_or("no heralded events")?;
    let msg = format!("F = {:.4} +- {:.4} from {} heralds, {t:.1?}", f.value, f.stderr, p.heralded);
    if (f.value - 0.65).abs() <= 0.07 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn theta_sweep() -> Result<ResultSet, String> {
    let spec = ExperimentSpec {
        axis: SweepAxis::Theta,
        ..calibrated(100_000)
    };
    run_figure_sweep(&spec).map_err(|e| e.to_string())
}

fn distillation_gain(sweep: &ResultSet) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (p, r) in sweep.points.iter().zip(&sweep.references) {
        if p.value < PI / 5.0 - 1e-12 {
            continue;
        }
        let f = p.fidelity.ok_or(format!("theta {:.4}: no heralded events", p.value))?;
        let z = (f.value - r.raw_memory_fidelity) / f.stderr;
        ok &= z >= 3.0;
        parts.push(format!(
            "theta {:.4}: F {:.4} +- {:.4} vs raw {:.4} ({z:.1} sigma)",
            p.value, f.value, f.stderr, r.raw_memory_fidelity
        ));
    }
    if parts.is_empty() {
        return Err("no theta >= pi/5 in the grid".into());
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn rate_scaling(theta_sweep: &ResultSet, theta_sweep_time: Duration) -> Outcome {
    let start = Instant::now();
    // slope in the uncapped case: the attempt caps saturate the per-trial
    // success probability at large p_det
    let base = calibrated(20_000);
    let spec = ExperimentSpec {
        axis: SweepAxis::PDet,
        protocol: ProtocolConfig {
            n1_max: 10_000_000,
            n2_max: 10_000_000,
            ..base.protocol.clone()
        },
        ..base
    };
    let res = run_figure_sweep(&spec).map_err(|e| e.to_string())?;
    let x: Vec<f64> = res.points.iter().map(|p| p.value).collect();
    let heralded: Vec<f64> = res.points.iter().map(|p| p.herald_rate.value).collect();
    let slope = loglog_slope(&x, &heralded).ok_or("slope undefined")?;
    let dur = spec.protocol.attempt_duration;
    let photonics = spec.protocol.photonics.clone();
    let bk = |with_v: bool| -> Result<f64, String> {
        let y: Vec<f64> = x
            .iter()
            .map(|&p| barrett_kok_rate(p, with_v.then_some(&photonics), dur).map(|r| r.r))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        loglog_slope(&x, &y).ok_or_else(|| "slope undefined".to_string())
    };
    let (bk_ideal, bk_vis) = (bk(false)?, bk(true)?);

    // ordering at p_det = 1e-3 under calibration, best preparation angle
    let best = theta_sweep
        .points
        .iter()
        .zip(&theta_sweep.references)
        .filter_map(|(p, r)| p.rate.map(|rate| (p.value, rate, r)))
        .max_by(|a, b| a.1.r.total_cmp(&b.1.r))
        .ok_or("no ebit rate in the theta sweep")?;
    let (theta, rate, reference) = best;
    let t = within(Duration::from_secs(300), start - theta_sweep_time)?;
    let msg = format!(
        "slope {slope:.3}, Barrett-Kok slopes {bk_ideal:.6}/{bk_vis:.6}; at p_det 1e-3 best theta {theta:.4}: \
         r = {:.4} +- {:.4} Hz vs Barrett-Kok {:.4}/{:.4} Hz, {t:.1?}",
        rate.r, rate.r_stderr, reference.bk_rate_ideal, reference.bk_rate_visibility
    );
    let ordered = rate.r > reference.bk_rate_ideal && rate.r > reference.bk_rate_visibility;
    if (slope - 1.0).abs() <= 0.1 && (bk_ideal - 2.0).abs() < 1e-9 && (bk_vis - 2.0).abs() < 1e-9 && ordered {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn memory_storage() -> Outcome {
    let spec = ExperimentSpec {
        axis: SweepAxis::MemoryLifetime,
        ..calibrated(100_000)
    };
    let res = run_figure_sweep(&spec).map_err(|e| e.to_string())?;
    let eigen_min = res
        .storage
        .iter()
        .filter(|p| p.attempts <= 500)
        .map(|p| p.eigenstate_fidelity.value)
        .fold(f64::INFINITY, f64::min);
    let mut ok = eigen_min >= 0.95;
    let mut parts = vec![format!("eigenstate fidelity >= {eigen_min:.4} up to 500 attempts")];
    for f in &res.storage_fits {
        let rel = (f.one_over_e_attempts - f.configured).abs() / f.configured;
        ok &= rel <= 0.15;
        parts.push(format!(
            "node {:?} 1/e = {:.1} +- {:.1} (configured {}, {:.1}%)",
            f.node,
            f.one_over_e_attempts,
            f.stderr,
            f.configured,
            100.0 * rel
        ));
    }
    ok &= res.storage_fits.len() == 2;
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn feedback_compensation() -> Outcome {
    let spec = ExperimentSpec {
        axis: SweepAxis::FeedbackOscillation,
        ..calibrated(100_000)
    };
    let res = run_figure_sweep(&spec).map_err(|e| e.to_string())?;
    let mut ok = res.oscillation_fits.len() == 2;
    let mut parts = Vec::new();
    for f in &res.oscillation_fits {
        let rel = (f.frequency - f.configured).abs() / f.configured;
        ok &= rel < 0.01;
        parts.push(format!(
            "node {:?} {:.5} rad/attempt (configured {:.5}, {:.3}%)",
            f.node,
            f.frequency,
            f.configured,
            100.0 * rel
        ));
    }
    // noiseless dephasing, exact readout
    for (node, params) in [(Node::A, &spec.protocol.node_a), (Node::B, &spec.protocol.node_b)] {
        let params = NodeNoiseParams {
            memory_one_over_e_attempts: f64::INFINITY,
            t2_star_dephasing: false,
            ..params.clone()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts = feedback_oscillation(
            node,
            &params,
            spec.protocol.attempt_duration,
            &spec.grid.oscillation_attempts,
            Shots::Exact,
            &mut rng,
        )
        .map_err(|e| e.to_string())?;
        let fit = fit_oscillation(&pts, &params).map_err(|e| e.to_string())?;
        ok &= fit.residual_with_feedback < 1e-6;
        parts.push(format!("node {node:?} residual with feedback {:.1e}", fit.residual_with_feedback));
    }
    let msg = parts.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut en_err, mut f_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let rho = common::random_state(2, &mut rng);
        let en = log_negativity(&rho).map_err(|e| e.to_string())?;
        en_err = en_err.max((en - common::brute_force_log_negativity(&rho)).abs());
        let c = Correlators::of(&rho).map_err(|e| e.to_string())?;
        for target in [BellTarget::PsiPlus, BellTarget::PsiMinus] {
            let a = bell_fidelity_from_paulis(c.xx, c.yy, c.zz, target).map_err(|e| e.to_string())?;
            let b = rho.fidelity_with_pure(&target.state()).map_err(|e| e.to_string())?;
            f_err = f_err.max((a - b).abs());
        }
    }
    let msg = format!("100 states: max |dE_N| = {en_err:.1e}, max |dF| = {f_err:.1e}");
    if en_err <= 1e-10 && f_err <= 1e-12 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Output files of a run, without the wall-clock line of the manifest.
fn snapshot(dir: &Path) -> Vec<(String, String)> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut files: Vec<(String, String)> = entries
        .map(|e| {
            let e = e.unwrap();
            let text = fs::read_to_string(e.path()).unwrap();
            let text = text
                .lines()
                .filter(|l| !l.starts_with("# wall_time_s"))
                .collect::<Vec<_>>()
                .join("\n");
            (e.file_name().into_string().unwrap(), text)
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("run.toml");
    let text = "run.seed = 31\nrun.trials = 300\nrun.retain_rows = true\n\
                protocol.p_det = 0.05\nanalysis.bootstrap_resamples = 50\nanalysis.shots_per_basis = 500\n";
    fs::write(&cfg, text).map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for cmd in ["simulate", "sweep-theta", "memory-decay", "ebit-rate", "calibrate", "validate"] {
        let mut runs = Vec::new();
        // same output directory both times, so the configs are identical
        let out = tmp.path().join(cmd);
        for _ in 0..2 {
            if out.exists() {
                fs::remove_dir_all(&out).map_err(|e| e.to_string())?;
            }
            let mut stdout = Vec::new();
            let mut stderr = Vec::new();
            let args = ["distill", cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
            let code = parse_and_dispatch(args, &mut stdout, &mut stderr);
            if code != 0 {
                return Err(format!("{cmd} exited {code}: {}", String::from_utf8_lossy(&stderr)));
            }
            let mut files = snapshot(&out);
            files.push(("<stdout>".into(), String::from_utf8_lossy(&stdout).into_owned()));
            runs.push(files);
        }
        if runs[0] != runs[1] {
            return Err(format!("{cmd}: outputs differ between runs"));
        }
        checked.push(format!("{cmd} ({} files + stdout)", runs[0].len() - 1));
    }
    Ok(format!("identical across two runs: {}", checked.join(", ")))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |k: usize, name: &str, outcome: Outcome| {
        match &outcome {
            Ok(msg) => println!("PASS {k} {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {k} {name}: {msg}");
            }
        }
    };
    report(1, "ideal_limit", ideal_limit());
    report(2, "branch_frequencies", branch_frequencies());
    report(3, "calibrated_fidelity_at_pi_over_6", calibrated_fidelity());
    let start = Instant::now();
    let sweep = theta_sweep();
    let sweep_time = start.elapsed();
    match &sweep {
        Ok(s) => {
            report(4, "distillation_gain_over_raw_memory_state", distillation_gain(s));
            report(5, "rate_scaling_and_ordering", rate_scaling(s, sweep_time));
        }
        Err(e) => {
            report(4, "distillation_gain_over_raw_memory_state", Err(e.clone()));
            report(5, "rate_scaling_and_ordering", Err(e.clone()));
        }
    }
    report(6, "memory_storage", memory_storage());
    report(7, "feedback_compensation", feedback_compensation());
    report(8, "metric_oracles", metric_oracles());
    report(9, "determinism", determinism());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
