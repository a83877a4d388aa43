//! Standard gates. Two-qubit gates list their first qubit as the more
//! significant local bit, so `cnot()` applied to targets `[a, b]` uses `a`
//! as control.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{c, GateMatrix, Operator};

fn gate(arity: usize, entries: Vec<super::C64>) -> GateMatrix {
    GateMatrix::from_entries(arity, entries).expect("built-in gate is unitary")
}

fn real_gate(arity: usize, entries: &[f64]) -> GateMatrix {
    GateMatrix::new(Operator::real(arity, entries).expect("built-in gate shape"))
        .expect("built-in gate is unitary")
}

pub fn identity(arity: usize) -> GateMatrix {
    GateMatrix::new(Operator::identity(arity)).expect("identity is unitary")
}

pub fn x() -> GateMatrix {
    real_gate(1, &[0.0, 1.0, 1.0, 0.0])
}

pub fn y() -> GateMatrix {
    gate(1, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn z() -> GateMatrix {
    real_gate(1, &[1.0, 0.0, 0.0, -1.0])
}

pub fn h() -> GateMatrix {
    let s = FRAC_1_SQRT_2;
    real_gate(1, &[s, s, s, -s])
}

/// `R_z(phi) = diag(e^{-i phi/2}, e^{i phi/2})`.
pub fn rz(phi: f64) -> GateMatrix {
    let half = 0.5 * phi;
    gate(
        1,
        vec![
            c(half.cos(), -half.sin()),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(half.cos(), half.sin()),
        ],
    )
}

/// `R_x(phi) = exp(-i phi X / 2)`.
pub fn rx(phi: f64) -> GateMatrix {
    let (s, co) = (0.5 * phi).sin_cos();
    gate(
        1,
        vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
    )
}

pub fn cnot() -> GateMatrix {
    real_gate(
        2,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

pub fn cz() -> GateMatrix {
    real_gate(
        2,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, -1.0,
        ],
    )
}

/// NOT on the second qubit conditioned on the first being `|-X>`:
/// `|+X><+X| (x) I + |-X><-X| (x) X`.
pub fn x_basis_controlled_not() -> GateMatrix {
    let h_i = h().kron(&identity(1)).expect("1+1 qubits");
    h_i.then_after(&cnot()).then_after(&h_i)
}
