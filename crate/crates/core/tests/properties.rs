mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use common::{brute_force_log_negativity, hermitian_eigenvalues, state_from_numbers};
use distill_core::analysis::{bell_fidelity_from_paulis, log_negativity, BellTarget, Correlators};
use distill_core::channels::{dephasing_channel, depolarizing_channel, memory_storage_decay, NodeNoiseParams};
use distill_core::protocol::{
    assemble_register, distill_branches, raw_state, storage_and_feedback, swap_to_memory,
    undo_memory_frame, DetectorSign, Node, StorageOptions, MEM_A, MEM_B,
};
use distill_core::qstate::{gates, kraus_completeness_deviation, DensityMatrix, GateMatrix, Pauli, PureState};

fn numbers(n_qubits: usize) -> impl Strategy<Value = Vec<f64>> {
    let d = 1usize << n_qubits;
    prop::collection::vec(-1.0f64..1.0, 2 * d * d)
        .prop_filter("nonzero", |xs| xs.iter().any(|x| x.abs() > 1e-3))
}

fn state(n_qubits: usize) -> impl Strategy<Value = DensityMatrix> {
    numbers(n_qubits).prop_map(move |xs| state_from_numbers(n_qubits, &xs))
}

/// Random single-qubit unitary from Euler angles.
fn local_unitary(a: f64, b: f64, c: f64) -> GateMatrix {
    gates::rz(a).then_after(&gates::rx(b)).then_after(&gates::rz(c))
}

fn assert_physical(rho: &DensityMatrix) {
    assert!((rho.trace().re - 1.0).abs() < 1e-9);
    assert!(rho.trace().im.abs() < 1e-9);
    assert!(rho.hermiticity_error() < 1e-9);
    assert!(rho.min_eigenvalue() > -1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn gates_preserve_physicality_and_spectrum(
        rho in state(3),
        angles in prop::array::uniform3(-PI..PI),
        q in 0usize..3,
    ) {
        let u = local_unitary(angles[0], angles[1], angles[2]);
        let out = rho
            .apply_gate(&u, &[q])
            .and_then(|r| r.apply_gate(&gates::cnot(), &[q, (q + 1) % 3]))
            .and_then(|r| r.apply_gate(&gates::x_basis_controlled_not(), &[(q + 2) % 3, q]))
            .unwrap();
        assert_physical(&out);
        let mut a = rho.eigenvalues();
        let mut b = out.eigenvalues();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn kraus_application_is_linear(
        r1 in state(2),
        r2 in state(2),
        alpha in 0.0f64..1.0,
        p in 0.0f64..1.0,
        lambda in 0.0f64..1.0,
    ) {
        let mix = DensityMatrix::mixture(&[(alpha, &r1), (1.0 - alpha, &r2)]).unwrap();
        for ch in [depolarizing_channel(p, 2).unwrap(), dephasing_channel(lambda).unwrap()] {
            let targets: &[usize] = if ch.n_qubits() == 2 { &[0, 1] } else { &[1] };
            let k = ch.kraus();
            prop_assert!(kraus_completeness_deviation(&k) < 1e-9);
            let lhs = mix.apply_kraus(&k, targets).unwrap();
            let a = r1.apply_kraus(&k, targets).unwrap();
            let b = r2.apply_kraus(&k, targets).unwrap();
            let rhs = DensityMatrix::mixture(&[(alpha, &a), (1.0 - alpha, &b)]).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            prop_assert!(lhs.max_abs_diff(&ch.apply(&mix, targets).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn partial_trace_inverts_tensor(a in state(2), b in state(1)) {
        let ab = a.tensor(&b).unwrap();
        prop_assert!(ab.partial_trace(&[0, 1]).unwrap().max_abs_diff(&a) < 1e-12);
        prop_assert!(ab.partial_trace(&[2]).unwrap().max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn measurement_probabilities_sum_to_one(rho in state(3), q in 0usize..3) {
        let (p0, _) = rho.project(q, 0).unwrap();
        let (p1, _) = rho.project(q, 1).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_leaves_z_invariant(rho in state(1), lambda in 0.0f64..1.0) {
        let out = dephasing_channel(lambda).unwrap().apply(&rho, &[0]).unwrap();
        let z0 = rho.pauli_expectation(&[Pauli::Z]).unwrap();
        let z1 = out.pauli_expectation(&[Pauli::Z]).unwrap();
        prop_assert!((z0 - z1).abs() < 1e-12);
    }

    #[test]
    fn markovian_storage_composes(k in 1u64..400, n0 in 20.0f64..2000.0) {
        let params = NodeNoiseParams { memory_one_over_e_attempts: n0, ..NodeNoiseParams::node_a() };
        let step = dephasing_channel(memory_storage_decay(1, &params)).unwrap();
        let mut rho = DensityMatrix::from_pure(&PureState::plus_x());
        for _ in 0..k {
            rho = step.apply(&rho, &[0]).unwrap();
        }
        let direct = dephasing_channel(memory_storage_decay(k, &params))
            .unwrap()
            .apply(&DensityMatrix::from_pure(&PureState::plus_x()), &[0])
            .unwrap();
        prop_assert!(rho.max_abs_diff(&direct) < 1e-10);
    }

    #[test]
    fn bell_fidelity_identity(rho in state(2)) {
        let c = Correlators::of(&rho).unwrap();
        for target in [BellTarget::PsiPlus, BellTarget::PsiMinus] {
            let f = bell_fidelity_from_paulis(c.xx, c.yy, c.zz, target).unwrap();
            prop_assert!((f - rho.fidelity_with_pure(&target.state()).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn negativity_matches_oracle_and_local_invariance(
        rho in state(2),
        a in prop::array::uniform3(-PI..PI),
        b in prop::array::uniform3(-PI..PI),
    ) {
        let en = log_negativity(&rho).unwrap();
        prop_assert!(en >= 0.0);
        prop_assert!((en - brute_force_log_negativity(&rho)).abs() < 1e-10);
        let rotated = rho
            .apply_gate(&local_unitary(a[0], a[1], a[2]), &[0])
            .and_then(|r| r.apply_gate(&local_unitary(b[0], b[1], b[2]), &[1]))
            .unwrap();
        prop_assert!((log_negativity(&rotated).unwrap() - en).abs() < 1e-9);
    }

    #[test]
    fn distillation_branches_sum_to_one(
        mems in state(2),
        comms in state(2),
        ea in 0.0f64..0.1,
        eb in 0.0f64..0.1,
    ) {
        let node_a = NodeNoiseParams { local_gate_error: ea, ..NodeNoiseParams::node_a() };
        let node_b = NodeNoiseParams { local_gate_error: eb, ..NodeNoiseParams::node_b() };
        let rho4 = assemble_register(&comms, &mems).unwrap();
        let total: f64 = distill_branches(&rho4, &node_a, &node_b)
            .unwrap()
            .iter()
            .map(|b| b.probability)
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn herald_immune_to_common_phase(
        theta in 0.1f64..1.4,
        phi in -PI..PI,
        delta in -PI..PI,
        n2 in 0u64..200,
        same in any::<bool>(),
    ) {
        // Storage dephasing acts on the memory in the Hadamard frame, where a
        // common phase is an X rotation; it is switched off so the immunity is
        // exact. Deterministic storage phases, feedback, gate error and
        // visibility all stay on.
        let node_a = NodeNoiseParams {
            local_gate_error: 0.02,
            memory_one_over_e_attempts: f64::INFINITY,
            ..NodeNoiseParams::node_a()
        };
        let node_b = NodeNoiseParams {
            local_gate_error: 0.01,
            memory_one_over_e_attempts: f64::INFINITY,
            ..NodeNoiseParams::node_b()
        };
        let second = if same { DetectorSign::Plus } else { DetectorSign::Minus };
        let heralded = |phase: f64| {
            let plus = DensityMatrix::from_pure(&PureState::plus_x());
            let raw1 = raw_state(theta, DetectorSign::Plus, phase, 0.9, 0.0);
            let mut rho4 = assemble_register(&raw1, &plus.tensor(&plus).unwrap()).unwrap();
            rho4 = swap_to_memory(&rho4, Node::A, &node_a).unwrap();
            rho4 = swap_to_memory(&rho4, Node::B, &node_b).unwrap();
            let stored = storage_and_feedback(&rho4, n2, &node_a, &node_b, StorageOptions::default()).unwrap();
            let mems = stored.partial_trace(&[MEM_A, MEM_B]).unwrap();
            let raw2 = raw_state(theta, second, phase, 0.9, 0.0);
            let rho4 = assemble_register(&raw2, &mems).unwrap();
            let [herald, ..] = distill_branches(&rho4, &node_a, &node_b).unwrap();
            undo_memory_frame(&herald.memories.unwrap()).unwrap()
        };
        let target = if same { BellTarget::PsiPlus } else { BellTarget::PsiMinus }.state();
        let f0 = heralded(phi).fidelity_with_pure(&target).unwrap();
        let f1 = heralded(phi + delta).fidelity_with_pure(&target).unwrap();
        prop_assert!((f0 - f1).abs() < 1e-9);
    }
}

#[test]
fn raw_state_negativity_from_explicit_eigendecomposition() {
    let rho = raw_state(PI / 6.0, DetectorSign::Plus, 0.0, 1.0, 0.0);
    let oracle = brute_force_log_negativity(&rho);
    assert!((log_negativity(&rho).unwrap() - oracle).abs() < 1e-12);
    // c^2 / 2 = 3/8 coherence, s^2 = 1/4 population: one negative eigenvalue
    let ev = hermitian_eigenvalues(
        2,
        &[
            distill_core::qstate::C64::new(0.25, 0.0),
            distill_core::qstate::C64::new(0.375, 0.0),
            distill_core::qstate::C64::new(0.375, 0.0),
            distill_core::qstate::C64::new(0.0, 0.0),
        ],
    );
    let expected = (1.0 + 2.0 * ev[0].abs()).log2();
    assert!((oracle - expected).abs() < 1e-12);
}
