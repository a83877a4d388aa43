use std::path::PathBuf;
use std::time::Instant;

use distill_core::analysis::Table;
use distill_core::montecarlo::{
    calibrate_gate_error, estimate_event_rate, run_figure_sweep, ExperimentSpec, ResultSet,
    SweepAxis,
};
use distill_core::protocol::benchmark_fidelity;

use crate::config::{emit_manifest, Config, RunInfo};
use crate::error::CliError;
use crate::output::{config_hash, provenance, Outputs};
use crate::validate::run_invariant_suite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    SweepTheta,
    MemoryDecay,
    EbitRate,
    Calibrate,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepTheta => "sweep-theta",
            Command::MemoryDecay => "memory-decay",
            Command::EbitRate => "ebit-rate",
            Command::Calibrate => "calibrate",
            Command::Validate => "validate",
        }
    }
}

/// What a command reports back: files written and a one-line summary.
#[derive(Debug, Default)]
pub struct Report {
    pub written: Vec<PathBuf>,
    pub lines: Vec<String>,
}

fn add_results(out: &mut Outputs, res: &ResultSet, config: &Config) {
    let prov = provenance(config);
    for (name, table) in res.panels() {
        out.table(&name, &table, &prov);
    }
    let with_state = config.run.row_states.unwrap_or(false);
    if let Some(rows) = res.render_rows(&prov, with_state) {
        out.raw("trials.csv", rows);
    }
}

fn sweep(spec: &ExperimentSpec, axis: SweepAxis) -> Result<ResultSet, CliError> {
    let spec = ExperimentSpec {
        axis,
        ..spec.clone()
    };
    Ok(run_figure_sweep(&spec)?)
}

fn fidelity_line(res: &ResultSet) -> Vec<String> {
    res.points
        .iter()
        .map(|p| match p.fidelity {
            Some(f) => format!(
                "point {}: heralded {}/{} fidelity {:.4} +- {:.4}",
                p.value, p.heralded, p.trials, f.value, f.stderr
            ),
            None => format!("point {}: no heralded events in {} trials", p.value, p.trials),
        })
        .collect()
}

/// Named tables and summary lines.
type Calibration = (Vec<(String, Table)>, Vec<String>);

fn calibration(config: &Config, spec: &ExperimentSpec) -> Result<Calibration, CliError> {
    let targets = [
        config.node_a.benchmark_fidelity.unwrap_or(crate::config::BENCHMARK_FIDELITY_A),
        config.node_b.benchmark_fidelity.unwrap_or(crate::config::BENCHMARK_FIDELITY_B),
    ];
    let gate = calibrate_gate_error(targets)?;
    let mut t = Table::new(&[
        "node",
        "benchmark_fidelity",
        "per_gate_error",
        "aggregate_depolarizing",
        "simulated_benchmark_fidelity",
    ]);
    let mut lines = Vec::new();
    for ((node, target), p) in ["A", "B"].into_iter().zip(targets).zip(gate) {
        let simulated = benchmark_fidelity(p)?;
        t.push(vec![
            node.into(),
            target.into(),
            p.into(),
            (1.0 - (1.0 - p).powi(3)).into(),
            simulated.into(),
        ]);
        lines.push(format!("node {node}: benchmark {target} -> per-gate error {p:.6}"));
    }
    let rate = estimate_event_rate(spec)?;
    let mut r = Table::new(&["p_det", "theta_rad", "trials", "event_rate_hz", "event_rate_stderr"]);
    r.push(vec![
        spec.protocol.p_det.into(),
        spec.protocol.theta.into(),
        spec.trials.into(),
        rate.value.into(),
        rate.stderr.into(),
    ]);
    lines.push(format!("event rate {:.3} +- {:.3} Hz", rate.value, rate.stderr));
    Ok((vec![("gate_calibration".into(), t), ("event_rate".into(), r)], lines))
}

/// Runs one command to completion, then writes all its files.
pub fn execute(
    cmd: Command,
    config: &Config,
    spec: &ExperimentSpec,
    out_dir: &std::path::Path,
) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut out = Outputs::default();
    let mut report = Report::default();
    match cmd {
        Command::Validate => {
            let results = run_invariant_suite(spec);
            let failed: Vec<&str> = results
                .iter()
                .filter(|r| r.outcome.is_err())
                .map(|r| r.name)
                .collect();
            for r in &results {
                match &r.outcome {
                    Ok(detail) => report.lines.push(format!("ok {}: {detail}", r.name)),
                    Err(msg) => report.lines.push(format!("FAILED {}: {msg}", r.name)),
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Runtime(format!(
                    "invariant suite failed: {}",
                    failed.join(", ")
                )));
            }
            report.lines.push(format!(
                "validate: {}/{} invariants hold",
                results.len(),
                results.len()
            ));
            return Ok(report);
        }
        Command::Simulate => {
            let res = sweep(spec, spec.axis)?;
            report.lines.extend(fidelity_line(&res));
            add_results(&mut out, &res, config);
        }
        Command::SweepTheta => {
            let res = sweep(spec, SweepAxis::Theta)?;
            report.lines.extend(fidelity_line(&res));
            add_results(&mut out, &res, config);
        }
        Command::EbitRate => {
            let res = sweep(spec, SweepAxis::PDet)?;
            for p in &res.points {
                report.lines.push(format!(
                    "p_det {}: herald rate {:.4} Hz, ebit rate {}",
                    p.value,
                    p.herald_rate.value,
                    p.rate.map_or("n/a".into(), |r| format!("{:.4}", r.r))
                ));
            }
            add_results(&mut out, &res, config);
        }
        Command::MemoryDecay => {
            let lifetime = sweep(spec, SweepAxis::MemoryLifetime)?;
            let oscillation = sweep(
                &ExperimentSpec {
                    seed: spec.seed.wrapping_add(1),
                    ..spec.clone()
                },
                SweepAxis::FeedbackOscillation,
            )?;
            for f in &lifetime.storage_fits {
                report.lines.push(format!(
                    "node {:?}: fitted 1/e {:.1} +- {:.1} attempts (configured {})",
                    f.node, f.one_over_e_attempts, f.stderr, f.configured
                ));
            }
            for f in &oscillation.oscillation_fits {
                report.lines.push(format!(
                    "node {:?}: phase per attempt {:.5} rad (configured {:.5})",
                    f.node, f.frequency, f.configured
                ));
            }
            add_results(&mut out, &lifetime, config);
            add_results(&mut out, &oscillation, config);
        }
        Command::Calibrate => {
            let (tables, lines) = calibration(config, spec)?;
            let prov = provenance(config);
            for (name, t) in tables {
                out.table(&name, &t, &prov);
            }
            report.lines.extend(lines);
        }
    }
    let info = RunInfo {
        command: cmd.name().to_string(),
        code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config_sha256: config_hash(config),
    };
    out.raw("manifest.toml", emit_manifest(config, Some(&info)));
    report.written = out.write_all(out_dir)?;
    Ok(report)
}
