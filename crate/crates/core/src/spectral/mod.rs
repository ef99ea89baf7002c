//! Laplacian eigenspace approximation and the classical reference solver.

mod eigen;
mod jacobi;

pub use eigen::{
    conjugated_diagonal, offdiag_loss, offdiag_loss_and_gradient, optimize_eigenspace, optimize_eigenspace_observed, recovered_eigenvalues,
    EigenApproxConfig, GradientMethod, LossTrace,
};
pub use jacobi::{jacobi_eigendecomposition, SymmetricEigen};
