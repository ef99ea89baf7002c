//! Variational approximation of a Laplacian eigenbasis by the circuit
//! unitary: minimize the off-diagonal mass of `U† L U`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::connection::{init_phase_matrix, ConnectionMatrix};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::optim::AdamW;
use crate::qsim::{build_circuit, QsfCircuit, MATRIX_MODE_MAX_QUBITS};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GradientMethod {
    /// Reverse mode through the gate sequence, all basis columns at once.
    #[default]
    Adjoint,
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenApproxConfig {
    pub n_layers: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub alpha_init: f64,
    pub seed: u64,
    #[serde(default)]
    pub gradient: GradientMethod,
}

impl Default for EigenApproxConfig {
    fn default() -> Self {
        Self {
            n_layers: 8,
            iterations: 500,
            learning_rate: 0.01,
            alpha_init: 0.5,
            seed: 42,
            gradient: GradientMethod::Adjoint,
        }
    }
}

impl EigenApproxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..=1.0).contains(&self.alpha_init) {
            return Err(Error::Config(format!("alpha_init {} outside [0, 1]", self.alpha_init)));
        }
        if let GradientMethod::FiniteDifference { step } = self.gradient {
            if !(step > 0.0) {
                return Err(Error::Config("finite-difference step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Loss value at every iteration, in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTrace(pub Vec<f64>);

impl LossTrace {
    pub fn initial(&self) -> Option<f64> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn running_min(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(f64::INFINITY, |m, &v| {
                *m = m.min(v);
                Some(*m)
            })
            .collect()
    }
}

fn conjugated(u: &ComplexMatrix, l: &RealMatrix) -> Result<ComplexMatrix> {
    if u.rows() != l.rows() || u.cols() != l.cols() || u.rows() != u.cols() {
        return Err(Error::dim(format!(
            "unitary is {}x{} but Laplacian is {}x{}",
            u.rows(),
            u.cols(),
            l.rows(),
            l.cols()
        )));
    }
    u.adjoint().matmul(&l.to_complex().matmul(u)?)
}

/// `Σ_{i≠j} |(U† L U)_{ij}|²`.
pub fn offdiag_loss(u: &ComplexMatrix, l: &RealMatrix) -> Result<f64> {
    let c = conjugated(u, l)?;
    let n = c.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += c[(i, j)].norm_sqr();
            }
        }
    }
    Ok(total)
}

/// `diag(U† L U)` as reals.
pub fn conjugated_diagonal(u: &ComplexMatrix, l: &RealMatrix) -> Result<Vec<f64>> {
    let c = conjugated(u, l)?;
    Ok((0..c.rows()).map(|i| c[(i, i)].re).collect())
}

/// The approximate spectrum `diag(U† L U)`, ascending.
pub fn recovered_eigenvalues(circuit: &QsfCircuit, l: &RealMatrix) -> Result<Vec<f64>> {
    let mut d = conjugated_diagonal(&circuit.unitary()?, l)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Off-diagonal loss of `circuit`'s unitary and its gradient with respect to
/// every circuit parameter.
///
/// For unitary `U` the loss equals `‖L‖_F² − Σ_i d_i²` with
/// `d_i = ⟨u_i|L|u_i⟩`, so each column contributes an expectation value with
/// weight `−d_i`; the adjoint pass handles all columns as one block.
pub fn offdiag_loss_and_gradient(
    circuit: &QsfCircuit,
    l: &RealMatrix,
    method: GradientMethod,
) -> Result<(f64, Vec<f64>)> {
    let u = circuit.unitary()?;
    let loss = offdiag_loss(&u, l)?;
    let grads = match method {
        GradientMethod::Adjoint => {
            let dim = u.rows();
            let lu = l.to_complex().matmul(&u)?;
            let d: Vec<f64> = (0..dim)
                .map(|i| (0..dim).map(|a| u[(a, i)].conj() * lu[(a, i)]).sum::<Complex64>().re)
                .collect();
            let costate: Vec<Complex64> = (0..dim * dim)
                .map(|idx| lu.as_slice()[idx] * (-2.0 * d[idx % dim]))
                .collect();
            circuit.adjoint_block(u.as_slice(), &costate, dim, None)?
        }
        GradientMethod::FiniteDifference { step } => {
            let mut probe = circuit.clone();
            let base = circuit.params().to_vec();
            let mut g = Vec::with_capacity(base.len());
            for k in 0..base.len() {
                probe.params_mut()[k] = base[k] + step;
                let up = offdiag_loss(&probe.unitary()?, l)?;
                probe.params_mut()[k] = base[k] - step;
                let down = offdiag_loss(&probe.unitary()?, l)?;
                probe.params_mut()[k] = base[k];
                g.push((up - down) / (2.0 * step));
            }
            g
        }
    };
    Ok((loss, grads))
}

/// Trains a fresh circuit (phases from [`init_phase_matrix`] with
/// `config.alpha_init`) so that its unitary diagonalizes `l`, using Adam.
///
/// The trace holds the loss at each of the `config.iterations` evaluated
/// parameter sets; the returned circuit carries the last of them.
pub fn optimize_eigenspace(
    l: &RealMatrix,
    connection: &ConnectionMatrix,
    config: &EigenApproxConfig,
) -> Result<(QsfCircuit, LossTrace)> {
    optimize_eigenspace_observed(l, connection, config, |_, _, _| {})
}

/// [`optimize_eigenspace`] with a callback invoked at every iterate with the
/// iteration index, the circuit being evaluated and its loss.
pub fn optimize_eigenspace_observed(
    l: &RealMatrix,
    connection: &ConnectionMatrix,
    config: &EigenApproxConfig,
    mut observe: impl FnMut(usize, &QsfCircuit, f64),
) -> Result<(QsfCircuit, LossTrace)> {
    config.validate()?;
    let dim = l.rows();
    if !l.is_square() || dim == 0 || !dim.is_power_of_two() {
        return Err(Error::dim(format!(
            "Laplacian must be square with power-of-two size, got {}x{}",
            l.rows(),
            l.cols()
        )));
    }
    let n_q = dim.trailing_zeros() as usize;
    if n_q > MATRIX_MODE_MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n_q} qubits exceeds the matrix-mode cap of {MATRIX_MODE_MAX_QUBITS}"
        )));
    }
    if connection.n_qubits() != n_q {
        return Err(Error::dim(format!(
            "connection matrix has {} qubits, Laplacian needs {n_q}",
            connection.n_qubits()
        )));
    }
    let zero_rows = (0..dim).filter(|&i| l.row(i).iter().all(|&v| v == 0.0)).count();
    if zero_rows > 0 && l.as_slice().iter().any(|&v| v != 0.0) {
        log::warn!("Laplacian has {zero_rows} isolated node(s); optimization may stall");
    }

    let mut rng = rng::seeded(config.seed);
    let phases = init_phase_matrix(connection, config.alpha_init, &mut rng)?;
    let mut circuit = build_circuit(connection, &phases, config.n_layers, &mut rng)?;
    let mut adam = AdamW::adam(circuit.n_params());
    let mut trace = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let (loss, grads) = offdiag_loss_and_gradient(&circuit, l, config.gradient)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss(format!("iteration {it}")));
        }
        observe(it, &circuit, loss);
        trace.push(loss);
        if it + 1 < config.iterations {
            if let Some(k) = grads.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient(circuit.param_label(k)));
            }
            adam.step(circuit.params_mut(), &grads, config.learning_rate)?;
        }
    }
    Ok((circuit, LossTrace(trace)))
}
