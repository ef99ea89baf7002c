//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the simulator's kernels.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qsf_core::matrix::{ComplexMatrix, RealMatrix};
use qsf_core::connection::{ConnectionMatrix, PhaseMatrix};
use qsf_core::qsim::{Gate, PhaseGateKind, QsfCircuit};
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn mat2(m: [[Complex64; 2]; 2]) -> ComplexMatrix {
    ComplexMatrix::from_vec(2, 2, vec![m[0][0], m[0][1], m[1][0], m[1][1]]).unwrap()
}

/// Tensor product over qubits 0..n with qubit 0 as the leftmost factor.
fn chain(n: usize, factor: impl Fn(usize) -> ComplexMatrix) -> ComplexMatrix {
    let mut acc = factor(0);
    for q in 1..n {
        acc = kron(&acc, &factor(q));
    }
    acc
}

fn add(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect();
    ComplexMatrix::from_vec(a.rows(), a.cols(), data).unwrap()
}

fn reference_block(gate: &Gate, angle: f64) -> ComplexMatrix {
    let z = c(0.0, 0.0);
    match gate {
        Gate::Hadamard { .. } => {
            let h = 1.0 / 2f64.sqrt();
            mat2([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]])
        }
        Gate::Ry { .. } | Gate::Cry { .. } => {
            let (s, co) = ((angle / 2.0).sin(), (angle / 2.0).cos());
            mat2([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]])
        }
        Gate::Crz { .. } => mat2([
            [c((angle / 2.0).cos(), -(angle / 2.0).sin()), z],
            [z, c((angle / 2.0).cos(), (angle / 2.0).sin())],
        ]),
        Gate::ControlledPhase { .. } => mat2([[c(1.0, 0.0), z], [z, c(angle.cos(), angle.sin())]]),
    }
}

/// Full-matrix embedding of one gate built from Kronecker products.
pub fn gate_full_matrix(gate: &Gate, angle: f64, n: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    let block = reference_block(gate, angle);
    let target = gate.target();
    match gate.control() {
        None => chain(n, |q| if q == target { block.clone() } else { id.clone() }),
        Some(ctrl) => {
            let p0 = mat2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
            let p1 = mat2([[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
            let off = chain(n, |q| if q == ctrl { p0.clone() } else { id.clone() });
            let on = chain(n, |q| {
                if q == ctrl {
                    p1.clone()
                } else if q == target {
                    block.clone()
                } else {
                    id.clone()
                }
            });
            add(&off, &on)
        }
    }
}

/// Product of full gate matrices in application order (later gates on the
/// left). Phase-gate angles include `offsets[(control, target)]` if given.
pub fn reference_unitary(circuit: &QsfCircuit, offsets: Option<&RealMatrix>) -> ComplexMatrix {
    let n = circuit.n_qubits();
    let mut u = ComplexMatrix::identity(1 << n);
    for g in circuit.gates() {
        let mut angle = g.param().map_or(0.0, |p| circuit.params()[p]);
        if let (Some(o), Gate::Crz { control, target, .. } | Gate::ControlledPhase { control, target, .. }) = (offsets, g) {
            angle += o[(*control, *target)];
        }
        u = gate_full_matrix(g, angle, n).matmul(&u).unwrap();
    }
    u
}

/// The unitary DFT `F[j,k] = ω^{jk}/√N`, `ω = e^{2πi/N}`.
pub fn dft_matrix(n_qubits: usize) -> ComplexMatrix {
    let dim = 1usize << n_qubits;
    let mut f = ComplexMatrix::zeros(dim, dim);
    let scale = 1.0 / (dim as f64).sqrt();
    for j in 0..dim {
        for k in 0..dim {
            let angle = 2.0 * PI * ((j * k) % dim) as f64 / dim as f64;
            f[(j, k)] = Complex64::from_polar(scale, angle);
        }
    }
    f
}

pub fn bit_reverse(index: usize, n_bits: usize) -> usize {
    (0..n_bits).fold(0, |acc, b| (acc << 1) | ((index >> b) & 1))
}

pub fn random_state<R: Rng>(n_qubits: usize, rng: &mut R) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..1usize << n_qubits)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

/// Symmetric relative error with a floor so that near-zero gradients are
/// compared absolutely.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// Central finite differences of `f` around `x`.
pub fn central_diff(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Connection-matrix contraction written as the plainest possible loop over node
/// pairs and qubit pairs, reading bits off formatted binary strings.
pub fn naive_connection(adjacency: &RealMatrix, n_q: usize) -> RealMatrix {
    let n = adjacency.rows();
    let mut m = RealMatrix::zeros(n_q, n_q);
    for i in 0..n {
        let bi = format!("{:0width$b}", i, width = n_q);
        for j in 0..n {
            let bj = format!("{:0width$b}", j, width = n_q);
            if i == j || adjacency[(i, j)] == 0.0 {
                continue;
            }
            for ctrl in 0..n_q {
                for tgt in 0..n_q {
                    if bi.as_bytes()[ctrl] == b'1' && bj.as_bytes()[tgt] == b'1' {
                        m[(ctrl, tgt)] += adjacency[(i, j)] / n as f64;
                    }
                }
            }
        }
    }
    m
}

/// Σ_{i≠j} |(U†LU)_{ij}|² by explicit triple loops.
pub fn naive_offdiag_loss(u: &ComplexMatrix, l: &RealMatrix) -> f64 {
    let n = l.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut entry = c(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    entry += u[(a, i)].conj() * l[(a, b)] * u[(b, j)];
                }
            }
            total += entry.norm_sqr();
        }
    }
    total
}

/// A circuit with a random sparse-or-dense connection pattern and random
/// angles everywhere.
pub fn random_circuit<R: Rng>(n: usize, layers: usize, kind: PhaseGateKind, rng: &mut R) -> QsfCircuit {
    let density = rng.gen_range(0.3..=1.0);
    let mut m = RealMatrix::zeros(n, n);
    for v in m.as_mut_slice() {
        if rng.gen_bool(density) {
            *v = rng.gen_range(0.01..1.0);
        }
    }
    let conn = ConnectionMatrix::new(m).unwrap();
    let mut c = QsfCircuit::build(&conn, &PhaseMatrix::zeros(n), layers, kind, rng).unwrap();
    for p in c.params_mut() {
        *p = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    }
    c
}
