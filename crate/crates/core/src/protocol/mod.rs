//! The two-node distillation protocol as a state machine over a four-qubit
//! register laid out as (comm A, mem A, comm B, mem B).
//!
//! A trial runs four steps: heralded raw-state generation on the
//! communication qubits, a two-gate SWAP into the memories, a second raw
//! state while the memories are stored (with phase feedback), and the local
//! distillation circuit whose (0, 0) readout heralds success.
//!
//! The SWAP leaves each memory in the Hadamard-rotated frame, so a stored raw
//! state `rho` sits in the memories as `(H (x) H) rho (H (x) H)`. The frame is
//! never undone inside the protocol; analysis undoes it with
//! [`undo_memory_frame`] before comparing against Bell states.

mod circuit;
mod config;
mod raw;
mod trial;

pub use circuit::{
    assemble_register, benchmark_circuit, benchmark_fidelity, distill_branches, distill_step,
    per_gate_error_for_benchmark, storage_and_feedback, store_qubit, swap_to_memory,
    undo_memory_frame, Branch, DistillOutcome, StorageOptions,
};
pub use config::{ProtocolConfig, SignaturePolicy};
pub use raw::{generate_raw_state, prepare_theta, raw_state, PhaseEnvironment};
pub use trial::{run_trial, sample_success, AttemptOutcome, TrialRecord, TrialStage};

use rand::Rng;

use crate::qstate::PureState;

pub const COMM_A: usize = 0;
pub const MEM_A: usize = 1;
pub const COMM_B: usize = 2;
pub const MEM_B: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    A,
    B,
}

impl Node {
    pub fn comm(self) -> usize {
        match self {
            Node::A => COMM_A,
            Node::B => COMM_B,
        }
    }

    pub fn mem(self) -> usize {
        match self {
            Node::A => MEM_A,
            Node::B => MEM_B,
        }
    }
}

/// Beam-splitter output port that registered the heralding photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorSign {
    Plus,
    Minus,
}

impl DetectorSign {
    pub fn value(self) -> f64 {
        match self {
            DetectorSign::Plus => 1.0,
            DetectorSign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            DetectorSign::Plus => '+',
            DetectorSign::Minus => '-',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Self> {
        match ch {
            '+' => Some(DetectorSign::Plus),
            '-' => Some(DetectorSign::Minus),
            _ => None,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(policy: SignaturePolicy, rng: &mut R) -> Self {
        match policy {
            SignaturePolicy::Plus => DetectorSign::Plus,
            SignaturePolicy::Minus => DetectorSign::Minus,
            SignaturePolicy::Both => {
                if rng.random::<bool>() {
                    DetectorSign::Plus
                } else {
                    DetectorSign::Minus
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairSign {
    SameDetector,
    DifferentDetector,
}

/// Detector signs of the two heralded raw states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HeraldSignature {
    pub first: DetectorSign,
    pub second: DetectorSign,
}

impl HeraldSignature {
    pub fn pair(&self) -> PairSign {
        if self.first == self.second {
            PairSign::SameDetector
        } else {
            PairSign::DifferentDetector
        }
    }

    /// Bell state the heralded memories should hold once the memory frame
    /// is undone: `|Psi+>` for the same detector, `|Psi->` otherwise.
    pub fn target(&self) -> PureState {
        target_bell_state(self.pair())
    }
}

pub fn target_bell_state(pair: PairSign) -> PureState {
    match pair {
        PairSign::SameDetector => PureState::psi(1.0, 0.0),
        PairSign::DifferentDetector => PureState::psi(-1.0, 0.0),
    }
}
