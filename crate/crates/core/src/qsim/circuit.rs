use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernels::{self, Mat2};
use super::state::{MarginalVector, StateVector};
use crate::connection::{ConnectionMatrix, PhaseMatrix};
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, RealMatrix};

/// Largest register for which [`QsfCircuit::unitary`] will materialize the
/// full matrix.
pub const MATRIX_MODE_MAX_QUBITS: usize = 12;

/// Half-width of the uniform range used for fresh RY/CRY angles.
pub const ROTATION_INIT_RANGE: f64 = 0.1;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Which controlled phase gate fills the Fourier ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseGateKind {
    /// Controlled `RZ(φ) = diag(e^{−iφ/2}, e^{iφ/2})`.
    #[default]
    Crz,
    /// Controlled `P(φ) = diag(1, e^{iφ})`, the gate of the textbook QFT.
    ControlledPhase,
}

/// One gate of the ansatz. Parametric gates refer to a slot of the circuit's
/// flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Hadamard { qubit: usize },
    Ry { qubit: usize, param: usize },
    Cry { control: usize, target: usize, param: usize },
    Crz { control: usize, target: usize, param: usize },
    ControlledPhase { control: usize, target: usize, param: usize },
}

impl Gate {
    pub fn param(&self) -> Option<usize> {
        match *self {
            Gate::Hadamard { .. } => None,
            Gate::Ry { param, .. }
            | Gate::Cry { param, .. }
            | Gate::Crz { param, .. }
            | Gate::ControlledPhase { param, .. } => Some(param),
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Hadamard { .. } | Gate::Ry { .. } => None,
            Gate::Cry { control, .. }
            | Gate::Crz { control, .. }
            | Gate::ControlledPhase { control, .. } => Some(control),
        }
    }

    pub fn target(&self) -> usize {
        match *self {
            Gate::Hadamard { qubit } | Gate::Ry { qubit, .. } => qubit,
            Gate::Cry { target, .. }
            | Gate::Crz { target, .. }
            | Gate::ControlledPhase { target, .. } => target,
        }
    }

    fn is_phase(&self) -> bool {
        matches!(self, Gate::Crz { .. } | Gate::ControlledPhase { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::Hadamard { .. } => "H",
            Gate::Ry { .. } => "RY",
            Gate::Cry { .. } => "CRY",
            Gate::Crz { .. } => "CRZ",
            Gate::ControlledPhase { .. } => "CP",
        }
    }

    /// The 2×2 block this gate applies to its target at `angle`.
    pub fn matrix(&self, angle: f64) -> Mat2 {
        match self {
            Gate::Hadamard { .. } => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Ry { .. } | Gate::Cry { .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ]
            }
            Gate::Crz { .. } => [
                [Complex64::from_polar(1.0, -angle / 2.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, angle / 2.0)],
            ],
            Gate::ControlledPhase { .. } => [
                [Complex64::new(1.0, 0.0), ZERO],
                [ZERO, Complex64::from_polar(1.0, angle)],
            ],
        }
    }

    /// d/dθ of [`Gate::matrix`].
    fn derivative(&self, angle: f64) -> Mat2 {
        match self {
            Gate::Hadamard { .. } => [[ZERO; 2]; 2],
            Gate::Ry { .. } | Gate::Cry { .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [
                    [Complex64::new(-0.5 * s, 0.0), Complex64::new(-0.5 * c, 0.0)],
                    [Complex64::new(0.5 * c, 0.0), Complex64::new(-0.5 * s, 0.0)],
                ]
            }
            Gate::Crz { .. } => [
                [-0.5 * I * Complex64::from_polar(1.0, -angle / 2.0), ZERO],
                [ZERO, 0.5 * I * Complex64::from_polar(1.0, angle / 2.0)],
            ],
            Gate::ControlledPhase { .. } => [[ZERO, ZERO], [ZERO, I * Complex64::from_polar(1.0, angle)]],
        }
    }

    fn apply(&self, amps: &mut [Complex64], width: usize, n_qubits: usize, angle: f64) {
        let m = self.matrix(angle);
        if self.is_phase() {
            kernels::apply_diag(amps, width, n_qubits, self.control(), self.target(), m[0][0], m[1][1]);
        } else {
            kernels::apply_2x2(amps, width, n_qubits, self.control(), self.target(), &m);
        }
    }

    fn apply_inverse(&self, amps: &mut [Complex64], width: usize, n_qubits: usize, angle: f64) {
        // H is self-inverse; every other gate is exp(−iθG) for a fixed G.
        let angle = if matches!(self, Gate::Hadamard { .. }) { angle } else { -angle };
        self.apply(amps, width, n_qubits, angle);
    }
}

/// Whether to count parameters for a fully connected register or for the
/// gates a particular connection matrix produces.
#[derive(Debug, Clone, Copy)]
pub enum Connectivity<'a> {
    Dense,
    Sparse(&'a ConnectionMatrix),
}

/// Learnable parameter count of an `n_layers`-deep ansatz on `n_q` qubits.
/// Dense connectivity gives `n_layers · n_q²`: `n_q` RY angles plus one CRY and
/// one CRZ per unordered qubit pair.
pub fn parameter_count(n_q: usize, n_layers: usize, connectivity: Connectivity<'_>) -> usize {
    let pairs = match connectivity {
        Connectivity::Dense => n_q * n_q.saturating_sub(1) / 2,
        Connectivity::Sparse(m) => (0..n_q)
            .flat_map(|a| ((a + 1)..n_q).map(move |b| (a, b)))
            .filter(|&(a, b)| m.connected(a, b))
            .count(),
    };
    n_layers * (n_q + 2 * pairs)
}

/// A layered, graph-connected parameterized QFT circuit.
///
/// Each layer is an RY wall, one CRY per connected pair (control = lower
/// index), then a Fourier ladder: for each qubit `q`, a Hadamard followed by
/// a controlled phase gate from every connected `c > q`. There is no final
/// bit-reversal network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsfCircuit {
    n_qubits: usize,
    n_layers: usize,
    phase_kind: PhaseGateKind,
    gates: Vec<Gate>,
    params: Vec<f64>,
}

/// Builds the ansatz with CRZ phases. See [`QsfCircuit::build`].
pub fn build_circuit<R: Rng + ?Sized>(
    connection: &ConnectionMatrix,
    phases: &PhaseMatrix,
    n_layers: usize,
    rng: &mut R,
) -> Result<QsfCircuit> {
    QsfCircuit::build(connection, phases, n_layers, PhaseGateKind::Crz, rng)
}

impl QsfCircuit {
    /// RY and CRY angles are drawn uniformly from `[−0.1, 0.1]` (layer by
    /// layer, RY wall first); every layer's phase gates start at
    /// `phases[c, q]`.
    pub fn build<R: Rng + ?Sized>(
        connection: &ConnectionMatrix,
        phases: &PhaseMatrix,
        n_layers: usize,
        phase_kind: PhaseGateKind,
        rng: &mut R,
    ) -> Result<Self> {
        let n = connection.n_qubits();
        if phases.n_qubits() != n {
            return Err(Error::dim(format!(
                "phase matrix is {}x{} but connection matrix is {n}x{n}",
                phases.n_qubits(),
                phases.n_qubits()
            )));
        }
        if n == 0 || n > 30 {
            return Err(Error::Capacity(format!("unsupported register size {n}")));
        }
        let mut gates = Vec::new();
        let mut params = Vec::new();
        fn push(gates: &mut Vec<Gate>, params: &mut Vec<f64>, value: f64, make: &dyn Fn(usize) -> Gate) {
            gates.push(make(params.len()));
            params.push(value);
        }
        for _ in 0..n_layers {
            for q in 0..n {
                let v = rng.gen_range(-ROTATION_INIT_RANGE..=ROTATION_INIT_RANGE);
                push(&mut gates, &mut params, v, &|param| Gate::Ry { qubit: q, param });
            }
            for c in 0..n {
                for t in (c + 1)..n {
                    if connection.connected(c, t) {
                        let v = rng.gen_range(-ROTATION_INIT_RANGE..=ROTATION_INIT_RANGE);
                        push(&mut gates, &mut params, v, &|param| Gate::Cry { control: c, target: t, param });
                    }
                }
            }
            for q in 0..n {
                gates.push(Gate::Hadamard { qubit: q });
                for c in (q + 1)..n {
                    if connection.connected(c, q) {
                        let v = phases.get(c, q);
                        push(&mut gates, &mut params, v, &|param| match phase_kind {
                            PhaseGateKind::Crz => Gate::Crz { control: c, target: q, param },
                            PhaseGateKind::ControlledPhase => Gate::ControlledPhase { control: c, target: q, param },
                        });
                    }
                }
            }
        }
        Ok(Self {
            n_qubits: n,
            n_layers,
            phase_kind,
            gates,
            params,
        })
    }

    /// An arbitrary gate sequence over `params`. Used for hand-built test
    /// circuits; validated but not required to follow the layer pattern.
    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>, params: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(Error::Capacity(format!("unsupported register size {n_qubits}")));
        }
        for g in &gates {
            let in_range = g.target() < n_qubits && g.control().map_or(true, |c| c < n_qubits && c != g.target());
            if !in_range {
                return Err(Error::InvalidInput(format!("gate {g:?} does not fit {n_qubits} qubits")));
            }
            if g.param().is_some_and(|p| p >= params.len()) {
                return Err(Error::InvalidInput(format!("gate {g:?} refers past {} parameters", params.len())));
            }
        }
        let phase_kind = if gates.iter().any(|g| matches!(g, Gate::ControlledPhase { .. })) {
            PhaseGateKind::ControlledPhase
        } else {
            PhaseGateKind::Crz
        };
        Ok(Self {
            n_qubits,
            n_layers: 1,
            phase_kind,
            gates,
            params,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn phase_kind(&self) -> PhaseGateKind {
        self.phase_kind
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// The flat learnable parameter view, in gate order.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::dim(format!(
                "expected {} circuit parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Sets every RY and CRY angle to zero, leaving phases untouched.
    pub fn zero_rotations(&mut self) {
        for g in &self.gates {
            if let Gate::Ry { param, .. } | Gate::Cry { param, .. } = *g {
                self.params[param] = 0.0;
            }
        }
    }

    /// Human-readable name of parameter slot `index`.
    pub fn param_label(&self, index: usize) -> String {
        let per_layer = self.params.len() / self.n_layers.max(1);
        let layer = if per_layer == 0 { 0 } else { index / per_layer };
        match self.gates.iter().find(|g| g.param() == Some(index)) {
            Some(g) => match g.control() {
                Some(c) => format!("layer {layer} {}({c},{})", g.name(), g.target()),
                None => format!("layer {layer} {}({})", g.name(), g.target()),
            },
            None => format!("circuit parameter {index}"),
        }
    }

    fn check_offsets(&self, offsets: Option<&RealMatrix>) -> Result<()> {
        if let Some(o) = offsets {
            if o.rows() != self.n_qubits || o.cols() != self.n_qubits {
                return Err(Error::dim(format!(
                    "phase offsets are {}x{}, circuit has {} qubits",
                    o.rows(),
                    o.cols(),
                    self.n_qubits
                )));
            }
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::dim(format!(
                "state has {} qubits, circuit has {}",
                state.n_qubits(),
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Angle actually applied by `gate`: its parameter plus, for phase gates,
    /// the per-sample offset at `(control, target)`.
    #[inline]
    fn angle(&self, gate: &Gate, offsets: Option<&RealMatrix>) -> f64 {
        let base = gate.param().map_or(0.0, |p| self.params[p]);
        match (gate.is_phase(), offsets) {
            (true, Some(o)) => base + o[(gate.control().unwrap(), gate.target())],
            _ => base,
        }
    }

    fn forward_block(&self, amps: &mut [Complex64], width: usize, offsets: Option<&RealMatrix>) {
        for g in &self.gates {
            g.apply(amps, width, self.n_qubits, self.angle(g, offsets));
        }
    }

    fn inverse_block(&self, amps: &mut [Complex64], width: usize, offsets: Option<&RealMatrix>) {
        for g in self.gates.iter().rev() {
            g.apply_inverse(amps, width, self.n_qubits, self.angle(g, offsets));
        }
    }

    /// `U · state`, gate by gate.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.apply_with_offsets(state, None)
    }

    /// Like [`apply`](Self::apply), with a per-sample matrix added to every
    /// phase-gate angle.
    pub fn apply_with_offsets(&self, state: &StateVector, offsets: Option<&RealMatrix>) -> Result<StateVector> {
        self.check_state(state)?;
        self.check_offsets(offsets)?;
        let mut out = state.clone();
        self.forward_block(out.amplitudes_mut(), 1, offsets);
        Ok(out)
    }

    /// `U† · state`.
    pub fn apply_inverse(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = state.clone();
        self.inverse_block(out.amplitudes_mut(), 1, None);
        Ok(out)
    }

    /// The full `2^n × 2^n` unitary. Refuses registers above
    /// [`MATRIX_MODE_MAX_QUBITS`].
    pub fn unitary(&self) -> Result<ComplexMatrix> {
        self.unitary_with_offsets(None)
    }

    pub fn unitary_with_offsets(&self, offsets: Option<&RealMatrix>) -> Result<ComplexMatrix> {
        if self.n_qubits > MATRIX_MODE_MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{} qubits exceeds the matrix-mode cap of {MATRIX_MODE_MAX_QUBITS}; use apply() on states instead",
                self.n_qubits
            )));
        }
        self.check_offsets(offsets)?;
        let dim = 1usize << self.n_qubits;
        let mut u = ComplexMatrix::identity(dim);
        let mut data = u.as_slice().to_vec();
        self.forward_block(&mut data, dim, offsets);
        u = ComplexMatrix::from_vec(dim, dim, data)?;
        Ok(u)
    }

    /// Adjoint back-propagation over a block of `width` states.
    ///
    /// `finals` holds `U|ψ_k⟩` for each column `k`, `costates` the matching
    /// `∂ℓ/∂⟨ψ_k|` (for ℓ = Σ_k ⟨ψ_k|O_k|ψ_k⟩ this is `O_k U|ψ_k⟩`). Returns
    /// `∂ℓ/∂θ` for every parameter.
    pub fn adjoint_block(
        &self,
        finals: &[Complex64],
        costates: &[Complex64],
        width: usize,
        offsets: Option<&RealMatrix>,
    ) -> Result<Vec<f64>> {
        let dim = 1usize << self.n_qubits;
        if finals.len() != dim * width || costates.len() != dim * width {
            return Err(Error::dim("adjoint buffers do not match the register size"));
        }
        self.check_offsets(offsets)?;
        let mut psi = finals.to_vec();
        let mut lambda = costates.to_vec();
        let mut grads = vec![0.0; self.params.len()];
        for g in self.gates.iter().rev() {
            let angle = self.angle(g, offsets);
            g.apply_inverse(&mut psi, width, self.n_qubits, angle);
            if let Some(p) = g.param() {
                let dm = g.derivative(angle);
                let overlap =
                    kernels::derivative_overlap(&lambda, &psi, width, self.n_qubits, g.control(), g.target(), &dm);
                grads[p] += 2.0 * overlap.re;
            }
            g.apply_inverse(&mut lambda, width, self.n_qubits, angle);
        }
        Ok(grads)
    }

    /// Gradient of a scalar loss of the output marginals, given the final
    /// state `U|ψ⟩` and `upstream[q] = ∂loss/∂P(q = 1)`.
    pub fn marginal_gradients_from_final(
        &self,
        final_state: &StateVector,
        upstream: &[f64],
        offsets: Option<&RealMatrix>,
    ) -> Result<Vec<f64>> {
        self.check_state(final_state)?;
        if upstream.len() != self.n_qubits {
            return Err(Error::dim(format!(
                "upstream gradient has {} entries for {} qubits",
                upstream.len(),
                self.n_qubits
            )));
        }
        let n = self.n_qubits;
        // λ = Oψ with O = Σ_q upstream[q]·|1⟩⟨1|_q, diagonal in the basis.
        let costate: Vec<Complex64> = final_state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let weight: f64 = (0..n)
                    .filter(|&q| (i >> (n - 1 - q)) & 1 == 1)
                    .map(|q| upstream[q])
                    .sum();
                a * weight
            })
            .collect();
        self.adjoint_block(final_state.amplitudes(), &costate, 1, offsets)
    }
}

/// `apply_circuit`: the circuit's action on a state.
pub fn apply_circuit(circuit: &QsfCircuit, state: &StateVector) -> Result<StateVector> {
    circuit.apply(state)
}

/// `circuit_unitary`: the materialized matrix (matrix mode only).
pub fn circuit_unitary(circuit: &QsfCircuit) -> Result<ComplexMatrix> {
    circuit.unitary()
}

/// Reverse-mode gradient of `loss(marginals(U|input⟩))` with respect to every
/// circuit parameter, given `upstream = ∂loss/∂marginals`.
pub fn circuit_gradients(circuit: &QsfCircuit, input: &StateVector, upstream: &MarginalVector) -> Result<Vec<f64>> {
    let out = circuit.apply(input)?;
    circuit.marginal_gradients_from_final(&out, &upstream.0, None)
}
