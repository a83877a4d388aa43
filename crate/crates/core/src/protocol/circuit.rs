use rand::Rng;

use crate::channels::{
    depolarizing_channel, dephasing_channel, free_evolution_decay, memory_storage_decay,
    readout_error, NodeNoiseParams,
};
use crate::error::{Error, Result};
use crate::qstate::{gates, DensityMatrix, PureState};

use super::{Node, COMM_A, COMM_B, MEM_A, MEM_B};

/// Conditional gate followed by the node's two-qubit depolarizing error.
fn noisy_gate(
    rho: &DensityMatrix,
    gate: &crate::qstate::GateMatrix,
    targets: [usize; 2],
    gate_error: f64,
) -> Result<DensityMatrix> {
    let out = rho.apply_gate(gate, &targets)?;
    depolarizing_channel(gate_error, 2)?.apply(&out, &targets)
}

/// Two conditional gates moving the communication qubit into a memory that
/// starts in `|+X>`: a CZ, then a NOT on the communication qubit controlled
/// by the memory's X basis. Maps `|c>|+X>` to `|0>` (x) `H|c>`.
fn swap_gates(rho: &DensityMatrix, comm: usize, mem: usize, gate_error: f64) -> Result<DensityMatrix> {
    let out = noisy_gate(rho, &gates::cz(), [comm, mem], gate_error)?;
    noisy_gate(&out, &gates::x_basis_controlled_not(), [mem, comm], gate_error)
}

/// Local distillation gates of one node. Afterwards the communication qubit
/// reads 0 exactly when the memory (in its unrotated frame) and the
/// communication qubit had odd parity.
fn distill_gates(rho: &DensityMatrix, comm: usize, mem: usize, gate_error: f64) -> Result<DensityMatrix> {
    let out = noisy_gate(rho, &gates::x_basis_controlled_not(), [mem, comm], gate_error)?;
    out.apply_gate(&gates::x(), &[comm])?
        .apply_gate(&gates::z(), &[mem])
}

fn check_register(rho: &DensityMatrix) -> Result<()> {
    if rho.n_qubits() != 4 {
        return Err(Error::MalformedRegister(format!(
            "expected 4 qubits (comm A, mem A, comm B, mem B), got {}",
            rho.n_qubits()
        )));
    }
    Ok(())
}

/// Places a (comm A, comm B) state and a (mem A, mem B) state into the
/// four-qubit register.
pub fn assemble_register(comms: &DensityMatrix, mems: &DensityMatrix) -> Result<DensityMatrix> {
    if comms.n_qubits() != 2 || mems.n_qubits() != 2 {
        return Err(Error::MalformedRegister(
            "communication and memory pairs must be two-qubit states".into(),
        ));
    }
    // tensor order is (comm A, comm B, mem A, mem B)
    comms.tensor(mems)?.permute(&[0, 2, 1, 3])
}

/// Transfers the communication qubit of `node` into its memory.
pub fn swap_to_memory(rho4: &DensityMatrix, node: Node, noise: &NodeNoiseParams) -> Result<DensityMatrix> {
    check_register(rho4)?;
    let mem = node.mem();
    let reduced = rho4.partial_trace(&[mem])?;
    if reduced.fidelity_with_pure(&PureState::plus_x())? < 1.0 - 1e-9 {
        return Err(Error::MemoryNotInitialized(mem));
    }
    swap_gates(rho4, node.comm(), mem, noise.local_gate_error)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageOptions {
    pub feedback: bool,
    /// Used only when a node converts elapsed time into T2* dephasing.
    pub attempt_duration: f64,
}

impl Default for StorageOptions {
    fn default() -> Self {
        Self {
            feedback: true,
            attempt_duration: 6.0e-6,
        }
    }
}

/// Storage of qubit `q` during `n_attempts` entangling attempts: the
/// deterministic phase `R_z(phi n)`, the feedback rotation `R_z(-phi n)` when
/// enabled, then the accumulated dephasing.
pub fn store_qubit(
    rho: &DensityMatrix,
    q: usize,
    n_attempts: u64,
    params: &NodeNoiseParams,
    opts: StorageOptions,
) -> Result<DensityMatrix> {
    if n_attempts == 0 {
        return Ok(rho.clone());
    }
    let phase = params.phi_per_attempt * n_attempts as f64;
    let mut out = rho.apply_gate(&gates::rz(phase), &[q])?;
    if opts.feedback {
        out = out.apply_gate(&gates::rz(-phase), &[q])?;
    }
    let mut keep = 1.0 - memory_storage_decay(n_attempts, params);
    if params.t2_star_dephasing {
        let elapsed = n_attempts as f64 * opts.attempt_duration;
        keep *= 1.0 - free_evolution_decay(elapsed, params.t2_star);
    }
    dephasing_channel((1.0 - keep).clamp(0.0, 1.0))?.apply(&out, &[q])
}

/// Storage of both memories while the second raw state is generated.
pub fn storage_and_feedback(
    rho4: &DensityMatrix,
    n_attempts: u64,
    node_a: &NodeNoiseParams,
    node_b: &NodeNoiseParams,
    opts: StorageOptions,
) -> Result<DensityMatrix> {
    check_register(rho4)?;
    let out = store_qubit(rho4, MEM_A, n_attempts, node_a, opts)?;
    store_qubit(&out, MEM_B, n_attempts, node_b, opts)
}

/// One readout branch of the distillation step.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub readout: (u8, u8),
    pub probability: f64,
    /// Normalized (mem A, mem B) state; `None` when the branch has
    /// negligible probability.
    pub memories: Option<DensityMatrix>,
}

/// All four readout branches of the distillation step, without readout
/// error, in the order (0,0), (0,1), (1,0), (1,1).
pub fn distill_branches(
    rho4: &DensityMatrix,
    node_a: &NodeNoiseParams,
    node_b: &NodeNoiseParams,
) -> Result<[Branch; 4]> {
    let gated = apply_distill_gates(rho4, node_a, node_b)?;
    let mut out = Vec::with_capacity(4);
    for a in 0..2u8 {
        let (pa, post_a) = gated.project(COMM_A, a)?;
        for b in 0..2u8 {
            let (probability, memories) = match &post_a {
                Some(state) => {
                    let (pb, post_b) = state.project(COMM_B, b)?;
                    let mems = post_b.map(|s| s.partial_trace(&[MEM_A, MEM_B])).transpose()?;
                    (pa * pb, mems)
                }
                None => (0.0, None),
            };
            out.push(Branch {
                readout: (a, b),
                probability,
                memories,
            });
        }
    }
    Ok(out.try_into().expect("four branches"))
}

fn apply_distill_gates(
    rho4: &DensityMatrix,
    node_a: &NodeNoiseParams,
    node_b: &NodeNoiseParams,
) -> Result<DensityMatrix> {
    check_register(rho4)?;
    let out = distill_gates(rho4, COMM_A, MEM_A, node_a.local_gate_error)?;
    distill_gates(&out, COMM_B, MEM_B, node_b.local_gate_error)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillOutcome {
    /// Reported readouts, after readout error.
    pub readout_a: u8,
    pub readout_b: u8,
    /// Projected outcomes before readout error.
    pub true_readout: (u8, u8),
    /// Normalized (mem A, mem B) state after the projection.
    pub memories: DensityMatrix,
    /// Born probability of the true branch.
    pub branch_prob: f64,
}

impl DistillOutcome {
    pub fn heralded(&self) -> bool {
        (self.readout_a, self.readout_b) == (0, 0)
    }
}

/// Applies the local distillation gates and reads out both communication
/// qubits. `rho4` must hold the first raw copy in the memories (memory
/// frame) and the second on the communication qubits.
pub fn distill_step<R: Rng + ?Sized>(
    rho4: &DensityMatrix,
    node_a: &NodeNoiseParams,
    node_b: &NodeNoiseParams,
    rng: &mut R,
) -> Result<DistillOutcome> {
    let gated = apply_distill_gates(rho4, node_a, node_b)?;
    let ma = gated.measure_qubit(COMM_A, rng)?;
    let mb = ma.post.measure_qubit(COMM_B, rng)?;
    let memories = mb.post.partial_trace(&[MEM_A, MEM_B])?;
    Ok(DistillOutcome {
        readout_a: readout_error(ma.outcome, node_a, rng),
        readout_b: readout_error(mb.outcome, node_b, rng),
        true_readout: (ma.outcome, mb.outcome),
        memories,
        branch_prob: ma.probability * mb.probability,
    })
}

/// Undoes the Hadamard frame the SWAP leaves on both memories.
pub fn undo_memory_frame(mems: &DensityMatrix) -> Result<DensityMatrix> {
    if mems.n_qubits() != 2 {
        return Err(Error::MalformedRegister(
            "memory frame acts on the (mem A, mem B) pair".into(),
        ));
    }
    mems.apply_gate(&gates::h(), &[0])?.apply_gate(&gates::h(), &[1])
}

/// Local Bell-state benchmark on one node's (comm, mem) pair: prepare the
/// communication qubit in `|+X>`, SWAP it into the memory, then run the
/// node's distillation gate on the reset communication qubit. Every
/// conditional gate carries `gate_error`.
pub fn benchmark_circuit(gate_error: f64) -> Result<DensityMatrix> {
    let plus = DensityMatrix::from_pure(&PureState::plus_x());
    let start = plus.tensor(&plus)?;
    let swapped = swap_gates(&start, 0, 1, gate_error)?;
    noisy_gate(&swapped, &gates::x_basis_controlled_not(), [1, 0], gate_error)
}

/// Ideal output of [`benchmark_circuit`] on (comm, mem):
/// `(|0>|+X> + |1>|-X>) / sqrt 2`.
pub fn benchmark_target() -> PureState {
    let zero_plus = PureState::zero().tensor(&PureState::plus_x()).expect("2 qubits");
    let one_minus = PureState::one().tensor(&PureState::minus_x()).expect("2 qubits");
    let amps = zero_plus
        .amplitudes()
        .iter()
        .zip(one_minus.amplitudes())
        .map(|(a, b)| a + b)
        .collect();
    PureState::normalized(amps).expect("nonzero")
}

/// Simulated Bell fidelity of the local benchmark.
pub fn benchmark_fidelity(gate_error: f64) -> Result<f64> {
    benchmark_circuit(gate_error)?.fidelity_with_pure(&benchmark_target())
}

/// Per-gate depolarizing probability that makes the three-gate benchmark
/// reach `target` Bell fidelity. Depolarizing commutes with the unitaries,
/// so the benchmark output is `q |B><B| + (1 - q) I/4` with `q = (1 - p)^3`.
pub fn per_gate_error_for_benchmark(target: f64) -> Result<f64> {
    if !(target > 0.25 && target <= 1.0) {
        return Err(Error::OutOfRange {
            name: "target_fidelity",
            value: target,
            invariant: "target fidelity in (0.25, 1]",
        });
    }
    let q = (4.0 * target - 1.0) / 3.0;
    Ok((1.0 - q.cbrt()).max(0.0))
}
