//! Learnable quantum spectral filters for graphs.
//!
//! A graph's adjacency matrix is contracted onto `log2(N)` qubits to decide
//! which controlled gates a layered, parameterized quantum Fourier circuit
//! contains and how its phases start. The crate provides
//!
//! * [`graph`] and [`connection`]: Laplacians, padding, random graphs and the
//!   graph-to-qubit contraction,
//! * [`qsim`]: a dense statevector simulator for the circuit with adjoint
//!   gradients,
//! * [`spectral`]: variational approximation of a Laplacian eigenbasis plus a
//!   Jacobi eigensolver used as an oracle,
//! * [`head`] and [`optim`]: a small batch-normalized MLP trained with AdamW
//!   and a plateau scheduler,
//! * [`dataset`]: TUDataset parsing, sample preparation and stratified folds,
//! * [`experiment`]: the eigen-approximation study and cross-validated
//!   hybrid classification, with reports and checkpoints.

pub mod connection;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod head;
pub mod matrix;
pub mod optim;
pub mod qsim;
pub mod rng;
pub mod spectral;

pub use connection::{
    add_connection_noise, init_phase_matrix, qubit_connection_matrix, ConnectionMatrix, PhaseMatrix,
};
pub use error::{Error, Result};
pub use graph::{erdos_renyi, normalized_laplacian, pad_graph, Graph};
pub use matrix::{ComplexMatrix, RealMatrix};
pub use qsim::{amplitude_encode, qubit_marginals, MarginalVector, QsfCircuit, StateVector};
