use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qstate::{DensityMatrix, PureState, C64};

use super::circuit::{assemble_register, distill_step, storage_and_feedback, swap_to_memory, StorageOptions};
use super::raw::{generate_raw_state, PhaseEnvironment};
use super::{DetectorSign, HeraldSignature, Node, ProtocolConfig, MEM_A, MEM_B};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptOutcome {
    /// Attempt index of the first success, in `[1, cap]`.
    Success(u64),
    Exhausted,
}

/// Index of the first successful attempt of a Bernoulli(`p`) sequence,
/// truncated at `cap`. Inverse-CDF sampling, so one uniform draw per call.
pub fn sample_success<R: Rng + ?Sized>(p: f64, cap: u64, rng: &mut R) -> AttemptOutcome {
    if p >= 1.0 {
        return AttemptOutcome::Success(1);
    }
    if p <= 0.0 || cap == 0 {
        return AttemptOutcome::Exhausted;
    }
    // u in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let n = (u.ln() / (-p).ln_1p()).ceil().max(1.0);
    if n <= cap as f64 {
        AttemptOutcome::Success(n as u64)
    } else {
        AttemptOutcome::Exhausted
    }
}

/// Where a trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStage {
    /// No success within `n1_max` attempts.
    FirstRoundExhausted,
    /// No success within `n2_max` attempts.
    SecondRoundExhausted,
    /// Distillation ran but did not report (0, 0).
    Rejected,
    Heralded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Attempts spent in the first round (capped value on exhaustion).
    pub n1: u64,
    /// Attempts spent in the second round; also the feedback count. Zero
    /// when the first round was exhausted.
    pub n2: u64,
    /// Present once both rounds have heralded.
    pub signatures: Option<HeraldSignature>,
    pub readouts: Option<(u8, u8)>,
    pub heralded: bool,
    /// (mem A, mem B) state after a herald, still in the memory frame.
    pub final_memory_state: Option<DensityMatrix>,
    /// Wall-clock time of the trial, s.
    pub elapsed_time: f64,
    pub stage: TrialStage,
}

impl TrialRecord {
    pub const HEADER: &'static str =
        "trial_id,n1,n2,sign1,sign2,readout_a,readout_b,heralded,elapsed_time";

    /// Header row; with `with_state` it lists the 16 real/imag pairs of the
    /// flattened final state too.
    pub fn header(with_state: bool) -> String {
        let mut h = Self::HEADER.to_string();
        if with_state {
            for k in 0..16 {
                let _ = write!(h, ",re{k},im{k}");
            }
        }
        h
    }

    /// One delimited row. Unavailable fields are written as `NA`. Floats use
    /// the shortest round-trip representation, so rows are bit-exact.
    pub fn to_row(&self, trial_id: u64, with_state: bool) -> String {
        let sign = |s: Option<DetectorSign>| s.map_or("NA".to_string(), |s| s.symbol().to_string());
        let bit = |b: Option<u8>| b.map_or("NA".to_string(), |b| b.to_string());
        let mut row = format!(
            "{trial_id},{},{},{},{},{},{},{},{}",
            self.n1,
            self.n2,
            sign(self.signatures.map(|s| s.first)),
            sign(self.signatures.map(|s| s.second)),
            bit(self.readouts.map(|r| r.0)),
            bit(self.readouts.map(|r| r.1)),
            u8::from(self.heralded),
            self.elapsed_time,
        );
        if with_state {
            match &self.final_memory_state {
                Some(rho) => {
                    for z in rho.entries() {
                        let _ = write!(row, ",{},{}", z.re, z.im);
                    }
                }
                None => row.push_str(&",NA".repeat(32)),
            }
        }
        row
    }

    /// Parses a row written by [`TrialRecord::to_row`]; returns the trial id
    /// and the record.
    pub fn from_row(row: &str) -> Result<(u64, Self)> {
        let bad = |what: &str| Error::Invalid(format!("trial row: bad {what}"));
        let fields: Vec<&str> = row.trim_end().split(',').collect();
        if fields.len() != 9 && fields.len() != 9 + 32 {
            return Err(Error::Invalid(format!(
                "trial row: expected 9 or 41 fields, got {}",
                fields.len()
            )));
        }
        let int = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(what));
        let sign = |s: &str| -> Result<Option<DetectorSign>> {
            match s {
                "NA" => Ok(None),
                _ => {
                    let mut chars = s.chars();
                    match (chars.next().and_then(DetectorSign::from_symbol), chars.next()) {
                        (Some(sign), None) => Ok(Some(sign)),
                        _ => Err(bad("sign")),
                    }
                }
            }
        };
        let bit = |s: &str| -> Result<Option<u8>> {
            match s {
                "NA" => Ok(None),
                "0" => Ok(Some(0)),
                "1" => Ok(Some(1)),
                _ => Err(bad("readout")),
            }
        };
        let trial_id = int(fields[0], "trial_id")?;
        let n1 = int(fields[1], "n1")?;
        let n2 = int(fields[2], "n2")?;
        let signatures = match (sign(fields[3])?, sign(fields[4])?) {
            (Some(first), Some(second)) => Some(HeraldSignature { first, second }),
            (None, None) => None,
            _ => return Err(bad("signature pair")),
        };
        let readouts = match (bit(fields[5])?, bit(fields[6])?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(bad("readout pair")),
        };
        let heralded = match fields[7] {
            "1" => true,
            "0" => false,
            _ => return Err(bad("heralded flag")),
        };
        let elapsed_time: f64 = fields[8].parse().map_err(|_| bad("elapsed_time"))?;
        let final_memory_state = if fields.len() > 9 && fields[9] != "NA" {
            let nums: Vec<f64> = fields[9..]
                .iter()
                .map(|s| s.parse::<f64>().map_err(|_| bad("state entry")))
                .collect::<Result<_>>()?;
            let entries = nums.chunks(2).map(|p| C64::new(p[0], p[1])).collect();
            Some(DensityMatrix::from_entries(2, entries)?)
        } else {
            None
        };
        let stage = match (readouts, heralded) {
            (Some(_), true) => TrialStage::Heralded,
            (Some(_), false) => TrialStage::Rejected,
            // first-round exhaustion never reaches the second round
            (None, _) if n2 > 0 => TrialStage::SecondRoundExhausted,
            (None, _) => TrialStage::FirstRoundExhausted,
        };
        Ok((
            trial_id,
            Self {
                n1,
                n2,
                signatures,
                readouts,
                heralded,
                final_memory_state,
                elapsed_time,
                stage,
            },
        ))
    }
}

/// One full protocol run. Failures (exhausted caps, wrong readout) are
/// recorded outcomes; an `Err` means an internal inconsistency.
///
/// The optical path phase is drawn once per trial when
/// `cfg.random_path_phase` is set and is shared by both raw states.
pub fn run_trial<R: Rng + ?Sized>(cfg: &ProtocolConfig, rng: &mut R) -> Result<TrialRecord> {
    let p = cfg.per_attempt_success();
    let dur = cfg.attempt_duration;
    let env = if cfg.random_path_phase {
        PhaseEnvironment::sample(rng)
    } else {
        PhaseEnvironment::new(0.0)
    };

    let n1 = match sample_success(p, cfg.n1_max, rng) {
        AttemptOutcome::Success(n) => n,
        AttemptOutcome::Exhausted => {
            return Ok(TrialRecord {
                n1: cfg.n1_max,
                n2: 0,
                signatures: None,
                readouts: None,
                heralded: false,
                final_memory_state: None,
                elapsed_time: cfg.n1_max as f64 * dur,
                stage: TrialStage::FirstRoundExhausted,
            });
        }
    };
    let first = DetectorSign::sample(cfg.signature_policy, rng);
    let raw1 = generate_raw_state(cfg, &env, first, rng);

    // memories initialized to |+X> at the start of the protocol
    let plus = DensityMatrix::from_pure(&PureState::plus_x());
    let mut rho4 = assemble_register(&raw1, &plus.tensor(&plus)?)?;
    rho4 = swap_to_memory(&rho4, Node::A, &cfg.node_a)?;
    rho4 = swap_to_memory(&rho4, Node::B, &cfg.node_b)?;

    let n2 = match sample_success(p, cfg.n2_max, rng) {
        AttemptOutcome::Success(n) => n,
        AttemptOutcome::Exhausted => {
            return Ok(TrialRecord {
                n1,
                n2: cfg.n2_max,
                signatures: None,
                readouts: None,
                heralded: false,
                final_memory_state: None,
                elapsed_time: (n1 + cfg.n2_max) as f64 * dur + cfg.local_ops_duration,
                stage: TrialStage::SecondRoundExhausted,
            });
        }
    };
    let second = DetectorSign::sample(cfg.signature_policy, rng);
    let signatures = HeraldSignature { first, second };

    let opts = StorageOptions {
        feedback: cfg.feedback,
        attempt_duration: dur,
    };
    let stored = storage_and_feedback(&rho4, n2, &cfg.node_a, &cfg.node_b, opts)?;
    let mems = stored.partial_trace(&[MEM_A, MEM_B])?;
    let raw2 = generate_raw_state(cfg, &env, second, rng);
    let rho4 = assemble_register(&raw2, &mems)?;

    let out = distill_step(&rho4, &cfg.node_a, &cfg.node_b, rng)?;
    let heralded = out.heralded();
    Ok(TrialRecord {
        n1,
        n2,
        signatures: Some(signatures),
        readouts: Some((out.readout_a, out.readout_b)),
        heralded,
        final_memory_state: heralded.then_some(out.memories),
        elapsed_time: (n1 + n2) as f64 * dur + cfg.local_ops_duration,
        stage: if heralded {
            TrialStage::Heralded
        } else {
            TrialStage::Rejected
        },
    })
}
