//! Cyclic Jacobi eigensolver for real symmetric matrices.
//!
//! Each rotation annihilates one off-diagonal pair; accumulated rotations
//! give the eigenvectors. Quadratically convergent and unconditionally
//! stable, which is what we want from an oracle. Cost is O(n³) per sweep, so
//! this is only meant for the small Laplacians the circuits can represent.

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthogonal; column `k` pairs with `values[k]`.
    pub vectors: RealMatrix,
}

fn off_diagonal_sq(a: &RealMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += a[(p, q)] * a[(p, q)];
        }
    }
    s
}

pub fn jacobi_eigendecomposition(s: &RealMatrix) -> Result<SymmetricEigen> {
    if !s.is_square() {
        return Err(Error::dim(format!("{}x{} matrix is not square", s.rows(), s.cols())));
    }
    let asym = s.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (max |S - S^T| = {asym:e})"
        )));
    }
    let n = s.rows();
    // Work on the exactly symmetrized copy.
    let mut a = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    let mut v = RealMatrix::identity(n);
    let scale = a.frobenius_norm_sq();
    let tol = scale * 1e-32;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_sq(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // A ← Jᵀ A J with J the (p, q) plane rotation [[c, s], [−s, c]].
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}
