use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this norm a feature vector is treated as all-zero.
pub const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Per-qubit probability of reading 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalVector(pub Vec<f64>);

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::dim(format!(
            "state length {len} is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    /// Wraps raw amplitudes without renormalizing.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_exact(amplitudes.len())?;
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Stores `features / ‖features‖₂` as real amplitudes. A vector with norm
/// below [`DEGENERATE_NORM`] maps to `|0…0⟩`.
pub fn amplitude_encode(features: &[f64]) -> Result<StateVector> {
    let n_qubits = log2_exact(features.len())?;
    let norm = features.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::InvalidInput("feature vector is not finite".into()));
    }
    if norm < DEGENERATE_NORM {
        return Ok(StateVector::zero(n_qubits));
    }
    Ok(StateVector {
        n_qubits,
        amplitudes: features
            .iter()
            .map(|&v| Complex64::new(v / norm, 0.0))
            .collect(),
    })
}

/// `P(qubit q = 1)` for every qubit, big-endian.
pub fn qubit_marginals(state: &StateVector) -> MarginalVector {
    let n = state.n_qubits;
    let mut p = vec![0.0; n];
    for (i, a) in state.amplitudes.iter().enumerate() {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (q, pq) in p.iter_mut().enumerate() {
            if (i >> (n - 1 - q)) & 1 == 1 {
                *pq += w;
            }
        }
    }
    MarginalVector(p)
}
