//! Dense statevector simulation of the layered parameterized QFT ansatz.

mod circuit;
pub mod kernels;
mod state;

pub use circuit::{
    apply_circuit, build_circuit, circuit_gradients, circuit_unitary, parameter_count, Connectivity, Gate,
    PhaseGateKind, QsfCircuit, MATRIX_MODE_MAX_QUBITS, ROTATION_INIT_RANGE,
};
pub use state::{amplitude_encode, qubit_marginals, MarginalVector, StateVector, DEGENERATE_NORM};
