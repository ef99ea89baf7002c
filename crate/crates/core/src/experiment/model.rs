//! The hybrid classifier: circuit marginals fed to the classical head.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ModelSpec;
use crate::connection::{ConnectionMatrix, PhaseMatrix};
use crate::dataset::PreparedSample;
use crate::error::{Error, Result};
use crate::head::{cross_entropy, cross_entropy_with_grad, ForwardCache, HeadModel};
use crate::matrix::RealMatrix;
use crate::qsim::{build_circuit, qubit_marginals, QsfCircuit, StateVector};

/// Circuit and head with a single flat parameter view (circuit first).
///
/// Every phase gate applies `learnable[c,t] + α·M_s[c,t]`, where `M_s` is the
/// sample's noisy connection matrix. The learnable part starts at
/// `(1 − α)·rand`, so the initial phase of sample `s` is
/// `(1 − α)·rand + α·M_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub circuit: QsfCircuit,
    pub head: HeadModel,
    pub alpha_init: f64,
}

/// Forward values of a training batch needed for backprop.
#[derive(Debug, Clone)]
pub struct BatchCache {
    head: ForwardCache,
}

impl HybridModel {
    /// Circuit rotations are drawn from `rng` first, then the head weights.
    pub fn new<R: Rng + ?Sized>(
        n_qubits: usize,
        spec: &ModelSpec,
        n_classes: usize,
        shared_random_phases: &RealMatrix,
        rng: &mut R,
    ) -> Result<Self> {
        let phases = PhaseMatrix::new(shared_random_phases.scale(1.0 - spec.alpha_init))?;
        let circuit = build_circuit(&ConnectionMatrix::dense(n_qubits), &phases, spec.n_layers, rng)?;
        let head = HeadModel::new(spec.head_config(n_qubits, n_classes), rng)?;
        Ok(Self {
            circuit,
            head,
            alpha_init: spec.alpha_init,
        })
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params() + self.head.parameter_count()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = self.circuit.params().to_vec();
        p.extend_from_slice(self.head.params());
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::dim(format!("expected {} parameters, got {}", self.n_params(), params.len())));
        }
        let (q, h) = params.split_at(self.circuit.n_params());
        self.circuit.set_params(q)?;
        self.head.set_params(h)
    }

    pub fn param_label(&self, i: usize) -> String {
        let nq = self.circuit.n_params();
        if i < nq {
            self.circuit.param_label(i)
        } else {
            self.head.param_label(i - nq)
        }
    }

    fn offsets(&self, s: &PreparedSample) -> RealMatrix {
        s.phase_offset(self.alpha_init)
    }

    /// Final states and the marginal matrix (one row per sample).
    pub fn quantum_forward(&self, samples: &[&PreparedSample]) -> Result<(Vec<StateVector>, RealMatrix)> {
        let n_q = self.circuit.n_qubits();
        let finals = samples
            .par_iter()
            .map(|s| self.circuit.apply_with_offsets(&s.encoded_state, Some(&self.offsets(s))))
            .collect::<Result<Vec<_>>>()?;
        let mut features = RealMatrix::zeros(finals.len(), n_q);
        for (i, f) in finals.iter().enumerate() {
            features.row_mut(i).copy_from_slice(&qubit_marginals(f).0);
        }
        Ok((finals, features))
    }

    /// Eval-mode logits.
    pub fn predict(&self, samples: &[&PreparedSample]) -> Result<RealMatrix> {
        let (_, features) = self.quantum_forward(samples)?;
        self.head.forward_eval(&features)
    }

    /// Eval-mode mean cross-entropy and accuracy.
    pub fn evaluate(&self, samples: &[&PreparedSample]) -> Result<(f64, f64)> {
        let logits = self.predict(samples)?;
        let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
        let loss = cross_entropy(&logits, &labels)?;
        let correct = labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| argmax(logits.row(i)) == l)
            .count();
        Ok((loss, correct as f64 / labels.len() as f64))
    }

    /// Train-mode loss and gradient over all parameters. Running statistics
    /// are not touched; pass the cache to [`commit_batch_stats`](Self::commit_batch_stats).
    pub fn loss_and_gradient<R: Rng + ?Sized>(
        &self,
        samples: &[&PreparedSample],
        rng: &mut R,
    ) -> Result<(f64, Vec<f64>, BatchCache)> {
        let (finals, features) = self.quantum_forward(samples)?;
        let (logits, head_cache) = self.head.forward_train(&features, rng)?;
        let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
        let (loss, dlogits) = cross_entropy_with_grad(&logits, &labels)?;
        let head_grads = self.head.backward(&head_cache, &dlogits)?;
        let per_sample = samples
            .par_iter()
            .zip(&finals)
            .enumerate()
            .map(|(i, (s, f))| {
                self.circuit
                    .marginal_gradients_from_final(f, head_grads.input.row(i), Some(&self.offsets(s)))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grads = vec![0.0; self.circuit.n_params()];
        for g in &per_sample {
            for (a, b) in grads.iter_mut().zip(g) {
                *a += b;
            }
        }
        grads.extend_from_slice(&head_grads.params);
        Ok((
            loss,
            grads,
            BatchCache { head: head_cache },
        ))
    }

    pub fn commit_batch_stats(&mut self, cache: &BatchCache) {
        self.head.commit_batch_stats(&cache.head);
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
