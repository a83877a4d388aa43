//! Run configuration: a TOML file of flat, namespaced keys whose names carry
//! their units (`node_a.delta_omega_khz`, `protocol.attempt_duration_us`).
//! Every key is optional; missing keys take the documented defaults, which
//! reproduce the calibrated device model. Unknown keys are rejected.
//!
//! The configuration is kept in file units. [`Config::to_experiment`]
//! converts to the simulator's SI units, so a config echoed into a manifest
//! reloads to exactly the same values.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use distill_core::channels::{NodeNoiseParams, PhotonicNoiseParams};
use distill_core::montecarlo::{AnalysisOptions, ExperimentSpec, SweepAxis, SweepGrid};
use distill_core::protocol::{per_gate_error_for_benchmark, ProtocolConfig, SignaturePolicy};
use distill_core::Error as CoreError;

use crate::error::CliError;

/// Measured benchmark fidelities of the local two-qubit Bell-state circuit.
pub const BENCHMARK_FIDELITY_A: f64 = 0.96;
pub const BENCHMARK_FIDELITY_B: f64 = 0.98;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Trials per sweep point; readout shots per state in the memory
    /// experiments.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    /// Write every trial record to `trials.csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retain_rows: Option<bool>,
    /// Append the 16 heralded-state entries to each retained row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_states: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_det: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n1_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_max: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature_policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempt_duration_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_ops_duration_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feedback: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_path_phase: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonicsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_count_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_drift_sigma_rad: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_omega_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_per_attempt_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_one_over_e_attempts: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_star_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_star_dephasing: Option<bool>,
    /// Target fidelity of the local Bell-state benchmark; sets the gate
    /// depolarizing strength.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout_fid_0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub readout_fid_1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Axis used by `simulate`: single, theta, n2_max, p_det, feedback.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n2_max: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_det: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub storage_attempts: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillation_attempts: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_resamples: Option<u64>,
    /// Simulated tomography shots per basis; 0 reports exact expectations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots_per_basis: Option<u64>,
}

/// A run configuration. Fields left `None` take the documented defaults;
/// [`load_config`] returns a fully resolved config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub photonics: PhotonicsSection,
    #[serde(default)]
    pub node_a: NodeSection,
    #[serde(default)]
    pub node_b: NodeSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn fill<T: Clone>(slot: &mut Option<T>, default: T) {
    if slot.is_none() {
        *slot = Some(default);
    }
}

/// File-unit defaults that do not survive an SI round trip verbatim.
struct NodeFileDefaults {
    delta_omega_khz: f64,
    t2_star_ms: f64,
    benchmark: f64,
}

const NODE_A_FILE: NodeFileDefaults = NodeFileDefaults {
    delta_omega_khz: 22.4,
    t2_star_ms: 3.4,
    benchmark: BENCHMARK_FIDELITY_A,
};
const NODE_B_FILE: NodeFileDefaults = NodeFileDefaults {
    delta_omega_khz: 26.6,
    t2_star_ms: 16.2,
    benchmark: BENCHMARK_FIDELITY_B,
};
const ATTEMPT_DURATION_US: f64 = 6.0;
const LOCAL_OPS_DURATION_MS: f64 = 1.0;

fn node_defaults(s: &mut NodeSection, p: &NodeNoiseParams, f: &NodeFileDefaults) {
    fill(&mut s.delta_omega_khz, f.delta_omega_khz);
    fill(&mut s.phi_per_attempt_rad, p.phi_per_attempt);
    fill(&mut s.memory_one_over_e_attempts, p.memory_one_over_e_attempts);
    fill(&mut s.decay_exponent, p.decay_exponent);
    fill(&mut s.t2_star_ms, f.t2_star_ms);
    fill(&mut s.t2_star_dephasing, p.t2_star_dephasing);
    fill(&mut s.benchmark_fidelity, f.benchmark);
    fill(&mut s.readout_fid_0, p.readout_fid_0);
    fill(&mut s.readout_fid_1, p.readout_fid_1);
}

impl Config {
    /// Fills every missing key with its documented default.
    pub fn resolved(mut self) -> Self {
        let spec = ExperimentSpec::default();
        let p = &spec.protocol;
        let r = &mut self.run;
        fill(&mut r.seed, 0);
        fill(&mut r.trials, spec.trials as u64);
        fill(&mut r.output_dir, "out".to_string());
        fill(&mut r.retain_rows, false);
        fill(&mut r.row_states, false);

        let s = &mut self.protocol;
        fill(&mut s.theta_rad, p.theta);
        fill(&mut s.p_det, p.p_det);
        fill(&mut s.n1_max, p.n1_max);
        fill(&mut s.n2_max, p.n2_max);
        fill(&mut s.signature_policy, p.signature_policy.to_string());
        fill(&mut s.attempt_duration_us, ATTEMPT_DURATION_US);
        fill(&mut s.local_ops_duration_ms, LOCAL_OPS_DURATION_MS);
        fill(&mut s.feedback, p.feedback);
        fill(&mut s.random_path_phase, p.random_path_phase);

        let s = &mut self.photonics;
        fill(&mut s.visibility, p.photonics.visibility);
        fill(&mut s.dark_count_fraction, p.photonics.dark_count_fraction);
        fill(&mut s.phase_drift_sigma_rad, p.photonics.phase_drift_sigma);

        node_defaults(&mut self.node_a, &NodeNoiseParams::node_a(), &NODE_A_FILE);
        node_defaults(&mut self.node_b, &NodeNoiseParams::node_b(), &NODE_B_FILE);

        let g = &spec.grid;
        let s = &mut self.sweep;
        fill(&mut s.axis, SweepAxis::Single.name().to_string());
        fill(&mut s.theta_rad, g.theta.clone());
        fill(&mut s.n2_max, g.n2_max.clone());
        fill(&mut s.p_det, g.p_det.clone());
        fill(&mut s.storage_attempts, g.storage_attempts.clone());
        fill(&mut s.oscillation_attempts, g.oscillation_attempts.clone());

        let a = &spec.analysis;
        let s = &mut self.analysis;
        fill(&mut s.bin_width, a.bin_width);
        fill(&mut s.bootstrap_resamples, a.bootstrap_resamples as u64);
        fill(&mut s.shots_per_basis, a.shots_per_basis.unwrap_or(0));
        self
    }

    /// Converts to simulator units and validates every value, naming the
    /// offending key on failure. Missing keys take their defaults.
    pub fn to_experiment(&self) -> Result<ExperimentSpec, KeyError> {
        let c = self.clone().resolved();
        let (r, p, ph, sw, an) = (&c.run, &c.protocol, &c.photonics, &c.sweep, &c.analysis);

        let policy: SignaturePolicy = p
            .signature_policy
            .as_deref()
            .unwrap()
            .parse()
            .map_err(|e| KeyError::new("protocol.signature_policy", e))?;
        let node_a = node_params(&c.node_a, "node_a")?;
        let node_b = node_params(&c.node_b, "node_b")?;
        let photonics = PhotonicNoiseParams {
            visibility: ph.visibility.unwrap(),
            dark_count_fraction: ph.dark_count_fraction.unwrap(),
            phase_drift_sigma: ph.phase_drift_sigma_rad.unwrap(),
        };
        photonics.validate().map_err(|e| KeyError::core("photonics", e))?;

        let protocol = ProtocolConfig {
            theta: p.theta_rad.unwrap(),
            p_det: p.p_det.unwrap(),
            n1_max: p.n1_max.unwrap(),
            n2_max: p.n2_max.unwrap(),
            signature_policy: policy,
            node_a,
            node_b,
            photonics,
            attempt_duration: p.attempt_duration_us.unwrap() * 1e-6,
            local_ops_duration: p.local_ops_duration_ms.unwrap() * 1e-3,
            feedback: p.feedback.unwrap(),
            random_path_phase: p.random_path_phase.unwrap(),
        };
        protocol.validate().map_err(|e| KeyError::core("protocol", e))?;

        let axis_name = sw.axis.as_deref().unwrap();
        let axis = SweepAxis::from_name(axis_name)
            .filter(|a| !matches!(a, SweepAxis::MemoryLifetime | SweepAxis::FeedbackOscillation))
            .ok_or_else(|| {
                KeyError::new(
                    "sweep.axis",
                    format!("`{axis_name}` is not one of single, theta, n2_max, p_det, feedback"),
                )
            })?;
        let grid = SweepGrid {
            theta: sw.theta_rad.clone().unwrap(),
            n2_max: sw.n2_max.clone().unwrap(),
            p_det: sw.p_det.clone().unwrap(),
            storage_attempts: sw.storage_attempts.clone().unwrap(),
            oscillation_attempts: sw.oscillation_attempts.clone().unwrap(),
        };
        for &t in &grid.theta {
            check_point(&protocol, "sweep.theta_rad", |c| c.theta = t)?;
        }
        for &n in &grid.n2_max {
            check_point(&protocol, "sweep.n2_max", |c| c.n2_max = n)?;
        }
        for &q in &grid.p_det {
            check_point(&protocol, "sweep.p_det", |c| c.p_det = q)?;
        }
        if grid.oscillation_attempts.len() < 4 {
            return Err(KeyError::new(
                "sweep.oscillation_attempts",
                "the oscillation fit needs at least 4 attempt counts",
            ));
        }
        for (key, empty) in [
            ("sweep.theta_rad", grid.theta.is_empty()),
            ("sweep.n2_max", grid.n2_max.is_empty()),
            ("sweep.p_det", grid.p_det.is_empty()),
            ("sweep.storage_attempts", grid.storage_attempts.len() < 2),
        ] {
            if empty {
                return Err(KeyError::new(key, "sweep list has too few values"));
            }
        }

        let trials = r.trials.unwrap();
        if trials == 0 {
            return Err(KeyError::new("run.trials", "violates invariant trials >= 1"));
        }
        let bin_width = an.bin_width.unwrap();
        if bin_width == 0 {
            return Err(KeyError::new("analysis.bin_width", "violates invariant bin_width >= 1"));
        }
        let spec = ExperimentSpec {
            protocol,
            axis,
            grid,
            trials: trials as usize,
            seed: r.seed.unwrap(),
            analysis: AnalysisOptions {
                bin_width,
                bootstrap_resamples: an.bootstrap_resamples.unwrap() as usize,
                shots_per_basis: Some(an.shots_per_basis.unwrap()).filter(|&s| s > 0),
            },
            retain_rows: r.retain_rows.unwrap(),
        };
        spec.validate().map_err(|e| KeyError::new("config", e))?;
        Ok(spec)
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.run.output_dir.clone().unwrap_or_else(|| "out".into()))
    }
}

fn check_point(
    base: &ProtocolConfig,
    key: &str,
    set: impl Fn(&mut ProtocolConfig),
) -> Result<(), KeyError> {
    let mut cfg = base.clone();
    set(&mut cfg);
    cfg.validate().map_err(|e| KeyError::new(key, e))
}

fn node_params(s: &NodeSection, prefix: &str) -> Result<NodeNoiseParams, KeyError> {
    let bench = s.benchmark_fidelity.unwrap();
    let local_gate_error = per_gate_error_for_benchmark(bench)
        .map_err(|e| KeyError::new(format!("{prefix}.benchmark_fidelity"), e))?;
    let p = NodeNoiseParams {
        delta_omega: s.delta_omega_khz.unwrap() * 2.0 * PI * 1e3,
        phi_per_attempt: s.phi_per_attempt_rad.unwrap(),
        memory_one_over_e_attempts: s.memory_one_over_e_attempts.unwrap(),
        decay_exponent: s.decay_exponent.unwrap(),
        t2_star: s.t2_star_ms.unwrap() * 1e-3,
        t2_star_dephasing: s.t2_star_dephasing.unwrap(),
        local_gate_error,
        readout_fid_0: s.readout_fid_0.unwrap(),
        readout_fid_1: s.readout_fid_1.unwrap(),
    };
    p.validate().map_err(|e| KeyError::core(prefix, e))?;
    Ok(p)
}

/// A configuration value that failed validation, with its full key.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyError {
    pub key: String,
    pub message: String,
}

impl KeyError {
    fn new(key: impl Into<String>, message: impl ToString) -> Self {
        Self {
            key: key.into(),
            message: message.to_string(),
        }
    }

    /// Maps a simulator range error onto the config key of `section`.
    fn core(section: &str, e: CoreError) -> Self {
        let key = match &e {
            CoreError::OutOfRange { name, .. } => {
                let field = match *name {
                    "theta" => "theta_rad",
                    "attempt_duration" => "attempt_duration_us",
                    "local_ops_duration" => "local_ops_duration_ms",
                    "phase_drift_sigma" => "phase_drift_sigma_rad",
                    "delta_omega" => "delta_omega_khz",
                    "phi_per_attempt" => "phi_per_attempt_rad",
                    "t2_star" => "t2_star_ms",
                    "local_gate_error" => "benchmark_fidelity",
                    other => other,
                };
                format!("{section}.{field}")
            }
            _ => section.to_string(),
        };
        Self::new(key, e)
    }
}

/// 1-based line of the first assignment to `key` in `text`, either as a
/// dotted key or inside its `[section]`.
pub fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let (section, field) = key.split_once('.').unwrap_or(("", key));
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = h.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = t.split_once('=') else {
            continue;
        };
        let lhs: String = lhs.split('.').map(str::trim).collect::<Vec<_>>().join(".");
        let full = if current.is_empty() {
            lhs
        } else {
            format!("{current}.{lhs}")
        };
        if full == key || (section.is_empty() && full == field) {
            return Some(i + 1);
        }
    }
    None
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses config text. `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<(Config, ExperimentSpec), CliError> {
    let raw: Config = toml::from_str(text).map_err(|e| CliError::Config {
        origin: origin.to_string(),
        line: e.span().map(|s| line_of_offset(text, s.start)),
        key: None,
        message: e.message().trim().replace('\n', " "),
    })?;
    let spec = raw.to_experiment().map_err(|e| CliError::Config {
        origin: origin.to_string(),
        line: line_of_key(text, &e.key),
        key: Some(e.key),
        message: e.message,
    })?;
    Ok((raw.resolved(), spec))
}

/// Reads, parses and validates a config file. Returns the resolved config
/// (all defaults filled in) and the simulator spec built from it.
pub fn load_config(path: &Path) -> Result<(Config, ExperimentSpec), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
        origin: path.display().to_string(),
        line: None,
        key: None,
        message: format!("cannot read config file: {e}"),
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Canonical flat-key text of a resolved config: one `section.key = value`
/// line per key, sections in declaration order.
pub fn canonical_text(config: &Config) -> String {
    let value = toml::Value::try_from(config.clone().resolved()).expect("config serializes");
    let mut out = String::new();
    if let toml::Value::Table(sections) = value {
        for name in ["run", "protocol", "photonics", "node_a", "node_b", "sweep", "analysis"] {
            let Some(toml::Value::Table(keys)) = sections.get(name) else {
                continue;
            };
            for (k, v) in keys {
                writeln!(out, "{name}.{k} = {v}").unwrap();
            }
        }
    }
    out
}

/// Run metadata written as comments above the config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub command: String,
    pub code_version: String,
    pub wall_time_s: f64,
    pub config_sha256: String,
}

/// Manifest text: metadata comments, then the resolved config. Loading the
/// manifest as a config reproduces the run's configuration exactly.
pub fn emit_manifest(config: &Config, info: Option<&RunInfo>) -> String {
    let mut out = String::from("# run manifest\n");
    if let Some(i) = info {
        writeln!(out, "# command = {}", i.command).unwrap();
        writeln!(out, "# code_version = {}", i.code_version).unwrap();
        writeln!(out, "# wall_time_s = {}", i.wall_time_s).unwrap();
        writeln!(out, "# config_sha256 = {}", i.config_sha256).unwrap();
    }
    out.push_str(&canonical_text(config));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_calibrated_default() {
        let (cfg, spec) = parse_config("", "<test>").unwrap();
        assert_eq!(spec.protocol.photonics.visibility, 0.73);
        assert_eq!(spec.protocol.node_a.memory_one_over_e_attempts, 273.0);
        assert_eq!(spec.protocol.node_b.memory_one_over_e_attempts, 272.0);
        assert_eq!(spec.protocol.n2_max, 50);
        assert!((spec.protocol.node_a.delta_omega - 2.0 * PI * 22.4e3).abs() < 1e-6);
        let cal = ProtocolConfig::calibrated();
        assert!((spec.protocol.node_a.local_gate_error - cal.node_a.local_gate_error).abs() < 1e-15);
        assert_eq!(cfg.run.seed, Some(0));
    }

    #[test]
    fn file_defaults_match_simulator_defaults() {
        let (_, spec) = parse_config("", "<test>").unwrap();
        let cal = ProtocolConfig::calibrated();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        assert!(close(spec.protocol.attempt_duration, cal.attempt_duration));
        assert!(close(spec.protocol.local_ops_duration, cal.local_ops_duration));
        for (got, want) in [(&spec.protocol.node_a, &cal.node_a), (&spec.protocol.node_b, &cal.node_b)] {
            assert!(close(got.delta_omega, want.delta_omega));
            assert!(close(got.t2_star, want.t2_star));
            assert!(close(got.local_gate_error, want.local_gate_error));
        }
    }

    #[test]
    fn only_named_node_keys_change() {
        let (_, spec) = parse_config("node_b.t2_star_ms = 10.0\n", "<test>").unwrap();
        assert_eq!(spec.protocol.node_b.t2_star, 10.0e-3);
        assert_eq!(spec.protocol.node_b.phi_per_attempt, NodeNoiseParams::node_b().phi_per_attempt);
        assert_eq!(spec.protocol.node_a.t2_star, NodeNoiseParams::node_a().t2_star);
    }

    #[test]
    fn sections_and_dotted_keys_are_equivalent() {
        let a = parse_config("photonics.visibility = 0.5\n", "<t>").unwrap();
        let b = parse_config("[photonics]\nvisibility = 0.5\n", "<t>").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn line_lookup() {
        let text = "# c\nrun.seed = 1\n[node_a]\nt2_star_ms = 2\n";
        assert_eq!(line_of_key(text, "run.seed"), Some(2));
        assert_eq!(line_of_key(text, "node_a.t2_star_ms"), Some(4));
        assert_eq!(line_of_key(text, "node_b.t2_star_ms"), None);
    }
}
