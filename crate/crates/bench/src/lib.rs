//! Fixtures shared by the benchmarks.

use qsf_core::connection::{init_phase_matrix, ConnectionMatrix};
use qsf_core::qsim::{build_circuit, QsfCircuit, StateVector};
use qsf_core::{amplitude_encode, rng};
use rand::Rng;

/// A dense `layers`-deep circuit on `n_q` qubits.
pub fn dense_circuit(n_q: usize, layers: usize, seed: u64) -> QsfCircuit {
    let mut r = rng::seeded(seed);
    let conn = ConnectionMatrix::dense(n_q);
    let phases = init_phase_matrix(&conn, 0.1, &mut r).expect("valid alpha");
    build_circuit(&conn, &phases, layers, &mut r).expect("valid circuit")
}

pub fn random_state(n_q: usize, seed: u64) -> StateVector {
    let mut r = rng::seeded(seed);
    let v: Vec<f64> = (0..1usize << n_q).map(|_| r.gen_range(-1.0..1.0)).collect();
    amplitude_encode(&v).expect("power-of-two length")
}
