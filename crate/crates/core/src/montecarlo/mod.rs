//! Trial ensembles, parameter sweeps and calibration runs.
//!
//! Every sweep point gets its own seed derived from the experiment seed and
//! the point index; every trial runs on its own ChaCha stream of that seed.
//! Trials execute in parallel and are collected in index order, so results
//! do not depend on thread count or scheduling.

mod aggregate;
mod storage;

pub use aggregate::{aggregate, ratio_estimate, PointAggregate};
pub use storage::{
    cardinal_states, feedback_oscillation, fit_memory_lifetime, fit_oscillation, memory_lifetime,
    OscillationFit, OscillationPoint, StorageFit, StoragePoint,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{
    barrett_kok_rate, bin_by_attempts, BinnedCurve, Cell, Estimate, Provenance, Shots, Table,
};
use crate::error::{Error, Result};
use crate::protocol::{
    assemble_register, benchmark_fidelity, per_gate_error_for_benchmark, raw_state, run_trial,
    storage_and_feedback, swap_to_memory, undo_memory_frame, DetectorSign, Node, ProtocolConfig,
    StorageOptions, TrialRecord, MEM_A, MEM_B,
};
use crate::qstate::{DensityMatrix, PureState};

/// Which parameter a run sweeps. Values come from the [`SweepGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// One point at the protocol configuration, plus the attempt-binned
    /// state decay.
    Single,
    Theta,
    N2Max,
    PDet,
    /// Feedback on, then off.
    FeedbackToggle,
    /// Single-node storage of the six cardinal states.
    MemoryLifetime,
    /// Single-node `<X>` with and without feedback.
    FeedbackOscillation,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Single => "single",
            SweepAxis::Theta => "theta",
            SweepAxis::N2Max => "n2_max",
            SweepAxis::PDet => "p_det",
            SweepAxis::FeedbackToggle => "feedback",
            SweepAxis::MemoryLifetime => "memory_lifetime",
            SweepAxis::FeedbackOscillation => "feedback_oscillation",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            SweepAxis::Single,
            SweepAxis::Theta,
            SweepAxis::N2Max,
            SweepAxis::PDet,
            SweepAxis::FeedbackToggle,
            SweepAxis::MemoryLifetime,
            SweepAxis::FeedbackOscillation,
        ]
        .into_iter()
        .find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    /// rad
    pub theta: Vec<f64>,
    pub n2_max: Vec<u64>,
    pub p_det: Vec<f64>,
    pub storage_attempts: Vec<u64>,
    pub oscillation_attempts: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            theta: vec![PI / 10.0, PI / 8.0, PI / 6.0, PI / 5.0, PI / 4.0],
            n2_max: vec![10, 25, 50, 100, 200, 500],
            p_det: vec![1e-4, 3e-4, 1e-3, 3e-3, 1e-2],
            storage_attempts: (0..=20).map(|k| k * 50).collect(),
            oscillation_attempts: (0..=100).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Width of the second-round attempt bins of the state-decay table.
    pub bin_width: u64,
    pub bootstrap_resamples: usize,
    /// Simulated tomography shots per correlator basis; `None` reports exact
    /// expectation values of the heralded states.
    pub shots_per_basis: Option<u64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            bin_width: 10,
            bootstrap_resamples: 1000,
            shots_per_basis: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub protocol: ProtocolConfig,
    pub axis: SweepAxis,
    pub grid: SweepGrid,
    /// Trials per sweep point; readout shots per state for the single-node
    /// memory experiments.
    pub trials: usize,
    pub seed: u64,
    pub analysis: AnalysisOptions,
    /// Keep every trial record in the result.
    pub retain_rows: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            protocol: ProtocolConfig::calibrated(),
            axis: SweepAxis::Single,
            grid: SweepGrid::default(),
            trials: 10_000,
            seed: 0,
            analysis: AnalysisOptions::default(),
            retain_rows: false,
        }
    }
}

impl ExperimentSpec {
    /// Protocol configuration of every point of the selected axis.
    pub fn points(&self) -> Vec<(f64, ProtocolConfig)> {
        let base = &self.protocol;
        let with = |f: &dyn Fn(&mut ProtocolConfig)| {
            let mut cfg = base.clone();
            f(&mut cfg);
            cfg
        };
        match self.axis {
            SweepAxis::Single | SweepAxis::MemoryLifetime | SweepAxis::FeedbackOscillation => {
                vec![(base.theta, base.clone())]
            }
            SweepAxis::Theta => self
                .grid
                .theta
                .iter()
                .map(|&t| (t, with(&|c| c.theta = t)))
                .collect(),
            SweepAxis::N2Max => self
                .grid
                .n2_max
                .iter()
                .map(|&n| (n as f64, with(&|c| c.n2_max = n)))
                .collect(),
            SweepAxis::PDet => self
                .grid
                .p_det
                .iter()
                .map(|&p| (p, with(&|c| c.p_det = p)))
                .collect(),
            SweepAxis::FeedbackToggle => vec![
                (1.0, with(&|c| c.feedback = true)),
                (0.0, with(&|c| c.feedback = false)),
            ],
        }
    }

    /// Checks the base configuration, every sweep point and the run
    /// settings. Called before any simulation.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::OutOfRange {
                name: "trials",
                value: 0.0,
                invariant: "trials >= 1",
            });
        }
        if self.analysis.bin_width == 0 {
            return Err(Error::OutOfRange {
                name: "bin_width",
                value: 0.0,
                invariant: "bin_width >= 1",
            });
        }
        if self.analysis.shots_per_basis == Some(0) {
            return Err(Error::OutOfRange {
                name: "shots_per_basis",
                value: 0.0,
                invariant: "shots >= 1",
            });
        }
        self.protocol.validate()?;
        for (_, cfg) in self.points() {
            cfg.validate()?;
        }
        let empty = match self.axis {
            SweepAxis::Theta => self.grid.theta.is_empty(),
            SweepAxis::N2Max => self.grid.n2_max.is_empty(),
            SweepAxis::PDet => self.grid.p_det.is_empty(),
            SweepAxis::MemoryLifetime => self.grid.storage_attempts.is_empty(),
            SweepAxis::FeedbackOscillation => self.grid.oscillation_attempts.len() < 4,
            SweepAxis::Single | SweepAxis::FeedbackToggle => false,
        };
        if empty {
            return Err(Error::Invalid(format!(
                "sweep grid for `{}` has too few values",
                self.axis.name()
            )));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of sweep point `point` of an experiment seeded with `seed`.
pub fn point_seed(seed: u64, point: usize) -> u64 {
    splitmix64(seed ^ splitmix64(point as u64))
}

/// Random stream of one trial.
pub fn trial_rng(point_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` protocol trials in parallel, in trial order.
pub fn run_trials(cfg: &ProtocolConfig, trials: usize, point_seed: u64) -> Result<Vec<TrialRecord>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &mut trial_rng(point_seed, t)))
        .collect()
}

/// Modeled first raw state after SWAP and `attempts` of storage, with the
/// optical phase known (no jitter), memory frame undone.
pub fn modeled_raw_memory_state(cfg: &ProtocolConfig, attempts: u64) -> Result<DensityMatrix> {
    let raw = raw_state(
        cfg.theta,
        DetectorSign::Plus,
        0.0,
        cfg.photonics.visibility,
        cfg.photonics.dark_count_fraction,
    );
    let plus = DensityMatrix::from_pure(&PureState::plus_x());
    let rho4 = assemble_register(&raw, &plus.tensor(&plus)?)?;
    let rho4 = swap_to_memory(&rho4, Node::A, &cfg.node_a)?;
    let rho4 = swap_to_memory(&rho4, Node::B, &cfg.node_b)?;
    let opts = StorageOptions {
        feedback: cfg.feedback,
        attempt_duration: cfg.attempt_duration,
    };
    let stored = storage_and_feedback(&rho4, attempts, &cfg.node_a, &cfg.node_b, opts)?;
    undo_memory_frame(&stored.partial_trace(&[MEM_A, MEM_B])?)
}

/// Fidelity of [`modeled_raw_memory_state`] with `|Psi+>`.
pub fn modeled_raw_memory_fidelity(cfg: &ProtocolConfig, attempts: u64) -> Result<f64> {
    modeled_raw_memory_state(cfg, attempts)?.fidelity_with_pure(&PureState::psi(1.0, 0.0))
}

/// Modeled fidelity of a raw state on the communication qubits, averaged
/// over its own phase jitter.
pub fn modeled_raw_comm_fidelity(cfg: &ProtocolConfig) -> Result<f64> {
    let sigma = cfg.photonics.phase_drift_sigma;
    let raw = raw_state(
        cfg.theta,
        DetectorSign::Plus,
        0.0,
        cfg.photonics.visibility * (-sigma * sigma / 2.0).exp(),
        cfg.photonics.dark_count_fraction,
    );
    raw.fidelity_with_pure(&PureState::psi(1.0, 0.0))
}

/// Attempts at which the raw memory state is modeled: the mean number of
/// second-round attempts until success.
pub const MODELED_STORAGE_ATTEMPTS: u64 = 25;

/// Model lines drawn next to the simulated points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointReference {
    pub raw_memory_fidelity: f64,
    pub raw_comm_fidelity: f64,
    /// Two-photon protocol ebit rates: perfect and measured visibility.
    pub bk_rate_ideal: f64,
    pub bk_rate_visibility: f64,
}

impl PointReference {
    pub fn of(cfg: &ProtocolConfig) -> Result<Self> {
        Ok(Self {
            raw_memory_fidelity: modeled_raw_memory_fidelity(cfg, MODELED_STORAGE_ATTEMPTS)?,
            raw_comm_fidelity: modeled_raw_comm_fidelity(cfg)?,
            bk_rate_ideal: barrett_kok_rate(cfg.p_det, None, cfg.attempt_duration)?.r,
            bk_rate_visibility: barrett_kok_rate(cfg.p_det, Some(&cfg.photonics), cfg.attempt_duration)?.r,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub axis: SweepAxis,
    pub points: Vec<PointAggregate>,
    pub references: Vec<PointReference>,
    /// Attempt-binned decay of the single-point run.
    pub decay: Option<BinnedCurve>,
    pub storage: Vec<StoragePoint>,
    pub storage_fits: Vec<StorageFit>,
    pub oscillation: Vec<OscillationPoint>,
    pub oscillation_fits: Vec<OscillationFit>,
    /// Trial records per point, when retained.
    pub rows: Option<Vec<Vec<TrialRecord>>>,
}

/// Runs the experiment described by `spec`. Deterministic for a fixed spec.
pub fn run_figure_sweep(spec: &ExperimentSpec) -> Result<ResultSet> {
    spec.validate()?;
    let mut out = ResultSet {
        axis: spec.axis,
        points: Vec::new(),
        references: Vec::new(),
        decay: None,
        storage: Vec::new(),
        storage_fits: Vec::new(),
        oscillation: Vec::new(),
        oscillation_fits: Vec::new(),
        rows: None,
    };
    let shots = Shots::Finite(spec.trials as u64);
    match spec.axis {
        SweepAxis::MemoryLifetime => {
            let opts = StorageOptions {
                feedback: spec.protocol.feedback,
                attempt_duration: spec.protocol.attempt_duration,
            };
            for (k, node) in [Node::A, Node::B].into_iter().enumerate() {
                let params = spec.protocol.node(node);
                let mut rng = trial_rng(point_seed(spec.seed, k), 0);
                let pts = memory_lifetime(node, params, opts, &spec.grid.storage_attempts, shots, &mut rng)?;
                if pts.len() >= 2 {
                    out.storage_fits.push(fit_memory_lifetime(&pts, params)?);
                }
                out.storage.extend(pts);
            }
        }
        SweepAxis::FeedbackOscillation => {
            for (k, node) in [Node::A, Node::B].into_iter().enumerate() {
                let params = spec.protocol.node(node);
                let mut rng = trial_rng(point_seed(spec.seed, k), 0);
                let pts = feedback_oscillation(
                    node,
                    params,
                    spec.protocol.attempt_duration,
                    &spec.grid.oscillation_attempts,
                    shots,
                    &mut rng,
                )?;
                out.oscillation_fits.push(fit_oscillation(&pts, params)?);
                out.oscillation.extend(pts);
            }
        }
        _ => {
            let mut rows = Vec::new();
            for (k, (value, cfg)) in spec.points().into_iter().enumerate() {
                let seed = point_seed(spec.seed, k);
                let trials = run_trials(&cfg, spec.trials, seed)?;
                out.points.push(aggregate(
                    value,
                    &trials,
                    spec.analysis.shots_per_basis,
                    spec.analysis.bootstrap_resamples,
                    splitmix64(seed),
                )?);
                out.references.push(PointReference::of(&cfg)?);
                if spec.axis == SweepAxis::Single {
                    out.decay = match bin_by_attempts(&trials, spec.analysis.bin_width) {
                        Ok(curve) => Some(curve),
                        Err(Error::NoHeraldedEvents) => None,
                        Err(e) => return Err(e),
                    };
                }
                if spec.retain_rows {
                    rows.push(trials);
                }
            }
            if spec.retain_rows {
                out.rows = Some(rows);
            }
        }
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn est_cells(e: Option<Estimate>) -> [Cell; 2] {
    [e.map(|e| e.value).into(), e.map(|e| e.stderr).into()]
}

impl ResultSet {
    fn fidelity_table(&self, value_col: &str) -> Table {
        let mut t = Table::new(&[
            value_col,
            "trials",
            "heralded",
            "fidelity",
            "fidelity_stderr",
            "xx",
            "xx_stderr",
            "yy",
            "yy_stderr",
            "zz",
            "zz_stderr",
            "raw_memory_fidelity_model",
            "raw_comm_fidelity_model",
        ]);
        for (p, r) in self.points.iter().zip(&self.references) {
            let mut row: Vec<Cell> = vec![p.value.into(), p.trials.into(), p.heralded.into()];
            row.extend(est_cells(p.fidelity));
            row.extend(est_cells(p.correlators.map(|c| c.xx)));
            row.extend(est_cells(p.correlators.map(|c| c.yy)));
            row.extend(est_cells(p.correlators.map(|c| c.zz)));
            row.push(r.raw_memory_fidelity.into());
            row.push(r.raw_comm_fidelity.into());
            t.push(row);
        }
        t
    }

    fn rate_table(&self, value_col: &str) -> Table {
        let mut t = Table::new(&[
            value_col,
            "trials",
            "events",
            "heralded",
            "total_time_s",
            "event_rate_hz",
            "event_rate_stderr",
            "herald_rate_hz",
            "herald_rate_stderr",
            "e_n",
            "e_n_stderr",
            "ebit_rate",
            "ebit_rate_stderr",
            "bk_ebit_rate_ideal",
            "bk_ebit_rate_visibility",
        ]);
        for (p, r) in self.points.iter().zip(&self.references) {
            let mut row: Vec<Cell> = vec![
                p.value.into(),
                p.trials.into(),
                p.events.into(),
                p.heralded.into(),
                p.total_time.into(),
            ];
            row.extend(est_cells(Some(p.event_rate)));
            row.extend(est_cells(Some(p.herald_rate)));
            row.push(p.rate.map(|r| r.e_n).into());
            row.push(p.rate.map(|r| r.e_n_stderr).into());
            row.push(p.rate.map(|r| r.r).into());
            row.push(p.rate.map(|r| r.r_stderr).into());
            row.push(r.bk_rate_ideal.into());
            row.push(r.bk_rate_visibility.into());
            t.push(row);
        }
        t
    }

    fn decay_table(curve: &BinnedCurve) -> Table {
        let mut t = Table::new(&[
            "n2_lo",
            "n2_hi",
            "count",
            "fidelity",
            "fidelity_stderr",
            "abs_xx",
            "xx_stderr",
            "abs_yy",
            "yy_stderr",
            "abs_zz",
            "zz_stderr",
        ]);
        for b in &curve.bins {
            let s = b.stats;
            let mut row: Vec<Cell> = vec![b.lo.into(), b.hi.into(), b.count.into()];
            row.extend(est_cells(s.map(|s| s.fidelity)));
            for e in [s.map(|s| s.xx), s.map(|s| s.yy), s.map(|s| s.zz)] {
                row.push(e.map(|e| e.value.abs()).into());
                row.push(e.map(|e| e.stderr).into());
            }
            t.push(row);
        }
        t
    }

    /// Plot-ready tables, one per panel, keyed by file stem.
    pub fn panels(&self) -> Vec<(String, Table)> {
        let mut out: Vec<(String, Table)> = Vec::new();
        let node = |n: Node| if n == Node::A { "A" } else { "B" };
        match self.axis {
            SweepAxis::Single => {
                out.push(("summary_fidelity".into(), self.fidelity_table("theta_rad")));
                out.push(("summary_rates".into(), self.rate_table("theta_rad")));
                if let Some(curve) = &self.decay {
                    out.push(("state_decay".into(), Self::decay_table(curve)));
                }
            }
            SweepAxis::Theta => {
                out.push(("fidelity_vs_theta".into(), self.fidelity_table("theta_rad")));
                out.push(("ebit_rate_vs_theta".into(), self.rate_table("theta_rad")));
            }
            SweepAxis::N2Max => {
                out.push(("fidelity_vs_n2_max".into(), self.fidelity_table("n2_max")));
                out.push(("rate_vs_n2_max".into(), self.rate_table("n2_max")));
            }
            SweepAxis::FeedbackToggle => {
                out.push(("fidelity_vs_feedback".into(), self.fidelity_table("feedback")));
                out.push(("rate_vs_feedback".into(), self.rate_table("feedback")));
            }
            SweepAxis::PDet => {
                out.push(("rate_vs_p_det".into(), self.rate_table("p_det")));
                let x: Vec<f64> = self.points.iter().map(|p| p.value).collect();
                let herald: Vec<f64> = self.points.iter().map(|p| p.herald_rate.value).collect();
                let event: Vec<f64> = self.points.iter().map(|p| p.event_rate.value).collect();
                let bk: Vec<f64> = self.references.iter().map(|r| r.bk_rate_ideal).collect();
                let mut t = Table::new(&["quantity", "loglog_slope"]);
                t.push(vec!["herald_rate".into(), loglog_slope(&x, &herald).into()]);
                t.push(vec!["event_rate".into(), loglog_slope(&x, &event).into()]);
                t.push(vec!["bk_rate".into(), loglog_slope(&x, &bk).into()]);
                out.push(("rate_scaling".into(), t));
            }
            SweepAxis::MemoryLifetime => {
                let mut t = Table::new(&[
                    "node",
                    "attempts",
                    "superposition_fidelity",
                    "superposition_stderr",
                    "eigenstate_fidelity",
                    "eigenstate_stderr",
                ]);
                for p in &self.storage {
                    let mut row: Vec<Cell> = vec![node(p.node).into(), p.attempts.into()];
                    row.extend(est_cells(Some(p.superposition_fidelity)));
                    row.extend(est_cells(Some(p.eigenstate_fidelity)));
                    t.push(row);
                }
                out.push(("memory_lifetime".into(), t));
                let mut f = Table::new(&["node", "fitted_one_over_e_attempts", "stderr", "configured"]);
                for s in &self.storage_fits {
                    f.push(vec![
                        node(s.node).into(),
                        s.one_over_e_attempts.into(),
                        s.stderr.into(),
                        s.configured.into(),
                    ]);
                }
                out.push(("memory_lifetime_fit".into(), f));
            }
            SweepAxis::FeedbackOscillation => {
                let mut t = Table::new(&[
                    "node",
                    "attempts",
                    "x_feedback",
                    "x_feedback_stderr",
                    "x_no_feedback",
                    "x_no_feedback_stderr",
                ]);
                for p in &self.oscillation {
                    let mut row: Vec<Cell> = vec![node(p.node).into(), p.attempts.into()];
                    row.extend(est_cells(Some(p.x_feedback)));
                    row.extend(est_cells(Some(p.x_no_feedback)));
                    t.push(row);
                }
                out.push(("feedback_oscillation".into(), t));
                let mut f = Table::new(&[
                    "node",
                    "fitted_phase_per_attempt",
                    "stderr",
                    "configured",
                    "residual_with_feedback",
                ]);
                for s in &self.oscillation_fits {
                    f.push(vec![
                        node(s.node).into(),
                        s.frequency.into(),
                        s.frequency_stderr.into(),
                        s.configured.into(),
                        s.residual_with_feedback.into(),
                    ]);
                }
                out.push(("feedback_oscillation_fit".into(), f));
            }
        }
        out
    }

    /// Retained trial rows as one delimited text block, with the sweep
    /// point index as the leading column.
    pub fn render_rows(&self, provenance: &Provenance, with_state: bool) -> Option<String> {
        let rows = self.rows.as_ref()?;
        let mut out = format!("{provenance}\npoint,{}\n", TrialRecord::header(with_state));
        for (k, recs) in rows.iter().enumerate() {
            for (t, rec) in recs.iter().enumerate() {
                out.push_str(&format!("{k},{}\n", rec.to_row(t as u64, with_state)));
            }
        }
        Some(out)
    }
}

/// Per-gate depolarizing probabilities reproducing benchmark Bell
/// fidelities `targets` (node A, node B), each checked by simulating the
/// benchmark circuit.
pub fn calibrate_gate_error(targets: [f64; 2]) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for (slot, &target) in out.iter_mut().zip(&targets) {
        let p = per_gate_error_for_benchmark(target)?;
        let achieved = benchmark_fidelity(p)?;
        if (achieved - target).abs() > 1e-6 {
            return Err(Error::Invalid(format!(
                "benchmark fidelity {achieved} misses target {target}"
            )));
        }
        *slot = p;
    }
    Ok(out)
}

/// Rate of trials in which both raw states were generated, in events per
/// second, from `spec.trials` trials at the base configuration.
pub fn estimate_event_rate(spec: &ExperimentSpec) -> Result<Estimate> {
    spec.validate()?;
    let trials = run_trials(&spec.protocol, spec.trials, point_seed(spec.seed, 0))?;
    Ok(aggregate(spec.protocol.theta, &trials, None, 0, 0)?.event_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(axis: SweepAxis) -> ExperimentSpec {
        ExperimentSpec {
            protocol: ProtocolConfig {
                p_det: 0.05,
                ..ProtocolConfig::calibrated()
            },
            axis,
            trials: 400,
            seed: 11,
            analysis: AnalysisOptions {
                bootstrap_resamples: 20,
                ..AnalysisOptions::default()
            },
            grid: SweepGrid {
                storage_attempts: vec![0, 100, 200, 400],
                oscillation_attempts: (0..40).collect(),
                ..SweepGrid::default()
            },
            retain_rows: true,
        }
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(point_seed(1, 2), point_seed(1, 2));
        assert_ne!(point_seed(1, 2), point_seed(1, 3));
        assert_ne!(point_seed(1, 2), point_seed(2, 2));
    }

    #[test]
    fn deterministic_results() {
        for axis in [SweepAxis::Single, SweepAxis::MemoryLifetime, SweepAxis::FeedbackOscillation] {
            let spec = small(axis);
            let a = run_figure_sweep(&spec).unwrap();
            let b = run_figure_sweep(&spec).unwrap();
            assert_eq!(a, b);
            let prov = Provenance {
                config_sha256: "x".into(),
                seed: spec.seed,
            };
            let render = |r: &ResultSet| {
                r.panels()
                    .iter()
                    .map(|(n, t)| format!("{n}\n{}", t.render(&prov)))
                    .collect::<String>()
            };
            assert_eq!(render(&a), render(&b));
        }
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let spec = small(SweepAxis::Single);
        let res = run_figure_sweep(&spec).unwrap();
        let prov = Provenance {
            config_sha256: "x".into(),
            seed: spec.seed,
        };
        let text = res.render_rows(&prov, true).unwrap();
        let parsed: Vec<TrialRecord> = text
            .lines()
            .skip(2)
            .map(|l| TrialRecord::from_row(l.split_once(',').unwrap().1).unwrap().1)
            .collect();
        let seed = splitmix64(point_seed(spec.seed, 0));
        let again = aggregate(
            spec.protocol.theta,
            &parsed,
            spec.analysis.shots_per_basis,
            spec.analysis.bootstrap_resamples,
            seed,
        )
        .unwrap();
        assert_eq!(again, res.points[0]);
        assert_eq!(
            res.points[0].heralded,
            parsed.iter().filter(|t| t.heralded).count()
        );
    }

    #[test]
    fn ideal_theta_sweep_is_flat() {
        let mut spec = small(SweepAxis::Theta);
        spec.protocol = ProtocolConfig {
            p_det: 0.2,
            ..ProtocolConfig::ideal(PI / 6.0)
        };
        spec.retain_rows = false;
        let res = run_figure_sweep(&spec).unwrap();
        assert_eq!(res.points.len(), 5);
        for p in &res.points {
            assert!((p.fidelity.unwrap().value - 1.0).abs() < 1e-9);
        }
        let panels = res.panels();
        assert_eq!(panels[0].0, "fidelity_vs_theta");
        assert_eq!(panels[0].1.rows.len(), 5);
    }

    #[test]
    fn invalid_point_rejected_before_running() {
        let mut spec = small(SweepAxis::Theta);
        spec.grid.theta = vec![0.3, 2.0];
        assert!(matches!(
            run_figure_sweep(&spec),
            Err(Error::OutOfRange { name: "theta", .. })
        ));
        let mut spec = small(SweepAxis::Single);
        spec.trials = 0;
        assert!(run_figure_sweep(&spec).is_err());
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_gate_error([1.0, 1.0]).unwrap(), [0.0, 0.0]);
        let [a, b] = calibrate_gate_error([0.96, 0.98]).unwrap();
        // aggregate strength of the three depolarizing channels
        assert!((1.0 - (1.0 - a).powi(3) - 0.0533333).abs() < 1e-6);
        assert!((1.0 - (1.0 - b).powi(3) - 0.0266667).abs() < 1e-6);
        assert!(calibrate_gate_error([0.2, 0.9]).is_err());
    }

    #[test]
    fn deterministic_success_event_rate() {
        let mut spec = small(SweepAxis::Single);
        spec.protocol.p_det = 1.0;
        spec.protocol.theta = PI / 2.0 - 1e-12;
        let rate = estimate_event_rate(&spec).unwrap();
        let expected =
            1.0 / (2.0 * spec.protocol.attempt_duration + spec.protocol.local_ops_duration);
        assert!((rate.value - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
    }
}
