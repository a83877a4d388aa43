//! Test-side oracles, written independently of the library code paths.
#![allow(dead_code)]

use distill_core::qstate::{DensityMatrix, C64};

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Eigenvalues of a Hermitian matrix given as row-major complex entries,
/// through the real embedding [[Re, -Im], [Im, Re]] (each value twice).
pub fn hermitian_eigenvalues(dim: usize, m: &[C64]) -> Vec<f64> {
    let mut a = vec![vec![0.0; 2 * dim]; 2 * dim];
    for i in 0..dim {
        for j in 0..dim {
            let z = m[i * dim + j];
            a[i][j] = z.re;
            a[i + dim][j + dim] = z.re;
            a[i][j + dim] = -z.im;
            a[i + dim][j] = z.im;
        }
    }
    let mut ev = jacobi_eigenvalues(a);
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev.chunks(2).map(|p| (p[0] + p[1]) / 2.0).collect()
}

/// log2 of the trace norm of the partial transpose on the second qubit,
/// built entry by entry: `<a b|rho^T_B|a' b'> = <a b'|rho|a' b>`.
pub fn brute_force_log_negativity(rho: &DensityMatrix) -> f64 {
    let mut pt = vec![C64::new(0.0, 0.0); 16];
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    pt[(2 * a + b) * 4 + 2 * a2 + b2] = rho.get(2 * a + b2, 2 * a2 + b);
                }
            }
        }
    }
    let norm: f64 = hermitian_eigenvalues(4, &pt).iter().map(|l| l.abs()).sum();
    norm.log2().max(0.0)
}

/// `G G^dag / tr` from `2 * 4^n` raw numbers.
pub fn state_from_numbers(n_qubits: usize, xs: &[f64]) -> DensityMatrix {
    let d = 1 << n_qubits;
    assert_eq!(xs.len(), 2 * d * d);
    let g: Vec<C64> = xs.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    let mut m = vec![C64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = (0..d).map(|k| g[i * d + k] * g[j * d + k].conj()).sum();
        }
    }
    let tr: f64 = (0..d).map(|i| m[i * d + i].re).sum();
    let m = m.into_iter().map(|z| z / tr).collect();
    DensityMatrix::from_entries(n_qubits, m).expect("G G^dag is a state")
}

/// Random state from a seeded generator, with entries in [-1, 1).
pub fn random_state<R: rand::Rng>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let d = 1 << n_qubits;
    let xs: Vec<f64> = (0..2 * d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    state_from_numbers(n_qubits, &xs)
}
