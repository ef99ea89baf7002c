//! Contraction of an N-node adjacency matrix onto `n_q` qubits, and the CRZ
//! phase initialization derived from it.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// `n_q × n_q` non-negative weights; entry `(c, t)` decides whether a
/// controlled gate with control `c` and target `t` is emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionMatrix(RealMatrix);

/// CRZ phases in radians, indexed `(control, target)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatrix(RealMatrix);

/// Value of bit `c` in the `n_bits`-long big-endian binary string of `index`.
/// Bit 0 is the most significant and corresponds to qubit 0.
#[inline]
pub fn big_endian_bit(index: usize, c: usize, n_bits: usize) -> bool {
    (index >> (n_bits - 1 - c)) & 1 == 1
}

impl ConnectionMatrix {
    pub fn new(entries: RealMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::dim("connection matrix must be square"));
        }
        if let Some(v) = entries.as_slice().iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "connection weight {v} is not finite and non-negative"
            )));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n_q: usize) -> Self {
        Self(RealMatrix::zeros(n_q, n_q))
    }

    /// Every pair connected with unit weight.
    pub fn dense(n_q: usize) -> Self {
        let mut m = RealMatrix::zeros(n_q, n_q);
        m.as_mut_slice().fill(1.0);
        Self(m)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.rows()
    }

    pub fn entries(&self) -> &RealMatrix {
        &self.0
    }

    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.0[(c, t)]
    }

    /// True when either orientation of the pair carries weight.
    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.0[(a, b)] != 0.0 || self.0[(b, a)] != 0.0
    }

    /// Places this matrix in the top-left block of an `n_q × n_q` zero matrix,
    /// i.e. onto the most significant qubits.
    pub fn embed(&self, n_q: usize) -> Result<Self> {
        let k = self.n_qubits();
        if k > n_q {
            return Err(Error::Capacity(format!(
                "cannot embed a {k}-qubit connection matrix into {n_q} qubits"
            )));
        }
        let mut m = RealMatrix::zeros(n_q, n_q);
        for c in 0..k {
            m.row_mut(c)[..k].copy_from_slice(self.0.row(c));
        }
        Ok(Self(m))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.scale(factor))
    }
}

impl PhaseMatrix {
    pub fn new(entries: RealMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::dim("phase matrix must be square"));
        }
        if entries.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("phase matrix has non-finite entries".into()));
        }
        Ok(Self(entries))
    }

    pub fn zeros(n_q: usize) -> Self {
        Self(RealMatrix::zeros(n_q, n_q))
    }

    /// The textbook QFT phases: `π / 2^{c−t}` for every control `c > t`.
    pub fn canonical_qft(n_q: usize) -> Self {
        let mut m = RealMatrix::zeros(n_q, n_q);
        for t in 0..n_q {
            for c in (t + 1)..n_q {
                m[(c, t)] = std::f64::consts::PI / (1u64 << (c - t)) as f64;
            }
        }
        Self(m)
    }

    pub fn n_qubits(&self) -> usize {
        self.0.rows()
    }

    pub fn entries(&self) -> &RealMatrix {
        &self.0
    }

    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.0[(c, t)]
    }
}

/// Accumulates `A[i,j] / N` into `M[c,t]` whenever bit `c` of `i` and bit `t`
/// of `j` are both set. `N` is the (padded) row count of `adjacency`; the
/// diagonal is skipped.
pub fn qubit_connection_matrix(adjacency: &RealMatrix, n_q: usize) -> Result<ConnectionMatrix> {
    let n = adjacency.rows();
    if !adjacency.is_square() {
        return Err(Error::dim("adjacency must be square"));
    }
    if n_q >= usize::BITS as usize || n > (1usize << n_q) {
        return Err(Error::Capacity(format!(
            "{n} nodes do not fit in {n_q} qubits"
        )));
    }
    let inv_n = 1.0 / n as f64;
    let mut m = RealMatrix::zeros(n_q, n_q);
    let set_bits = |index: usize| -> Vec<usize> {
        (0..n_q).filter(|&c| big_endian_bit(index, c, n_q)).collect()
    };
    let bits: Vec<Vec<usize>> = (0..n).map(set_bits).collect();
    for i in 0..n {
        for j in 0..n {
            let w = adjacency[(i, j)];
            if i == j || w == 0.0 {
                continue;
            }
            for &c in &bits[i] {
                for &t in &bits[j] {
                    m[(c, t)] += w * inv_n;
                }
            }
        }
    }
    ConnectionMatrix::new(m)
}

/// `phase[c,t] = (1 − α)·rand[c,t] + α·M[c,t]` with `rand` uniform in
/// `[0, 2π)`, drawn row-major.
pub fn init_phase_matrix<R: Rng + ?Sized>(
    connection: &ConnectionMatrix,
    alpha_init: f64,
    rng: &mut R,
) -> Result<PhaseMatrix> {
    let draws = random_phases(connection.n_qubits(), rng);
    mix_phases(connection, &draws, alpha_init)
}

/// The random half of the phase initialization, exposed so callers can record
/// or share the draw.
pub fn random_phases<R: Rng + ?Sized>(n_q: usize, rng: &mut R) -> RealMatrix {
    let mut m = RealMatrix::zeros(n_q, n_q);
    for v in m.as_mut_slice() {
        *v = rng.gen_range(0.0..TAU);
    }
    m
}

/// Mixes recorded random phases with a connection matrix.
pub fn mix_phases(
    connection: &ConnectionMatrix,
    random: &RealMatrix,
    alpha_init: f64,
) -> Result<PhaseMatrix> {
    if !(0.0..=1.0).contains(&alpha_init) {
        return Err(Error::InvalidInput(format!(
            "alpha_init {alpha_init} outside [0, 1]"
        )));
    }
    let n_q = connection.n_qubits();
    if random.rows() != n_q || random.cols() != n_q {
        return Err(Error::dim("random phase draw does not match connection size"));
    }
    let data = random
        .as_slice()
        .iter()
        .zip(connection.entries().as_slice())
        .map(|(&r, &m)| (1.0 - alpha_init) * r + alpha_init * m)
        .collect();
    PhaseMatrix::new(RealMatrix::from_vec(n_q, n_q, data)?)
}

/// Adds independent uniform noise from `[noise_low, noise_high]` to every
/// entry, so every qubit pair ends up connected.
pub fn add_connection_noise<R: Rng + ?Sized>(
    connection: &ConnectionMatrix,
    noise_low: f64,
    noise_high: f64,
    rng: &mut R,
) -> Result<ConnectionMatrix> {
    if !(noise_low > 0.0 && noise_low <= noise_high && noise_high.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise range [{noise_low}, {noise_high}] must satisfy 0 < low <= high"
        )));
    }
    let mut m = connection.0.clone();
    for v in m.as_mut_slice() {
        *v += rng.gen_range(noise_low..=noise_high);
    }
    ConnectionMatrix::new(m)
}
