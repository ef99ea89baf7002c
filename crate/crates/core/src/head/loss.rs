use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Mean cross-entropy of `logits` (B × C) against integer labels, with the
/// gradient with respect to the logits.
pub fn cross_entropy_with_grad(logits: &RealMatrix, labels: &[usize]) -> Result<(f64, RealMatrix)> {
    let (b, c) = (logits.rows(), logits.cols());
    if labels.len() != b {
        return Err(Error::dim(format!("{} labels for a batch of {b}", labels.len())));
    }
    if b == 0 {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
        return Err(Error::InvalidInput(format!("label {bad} out of range for {c} classes")));
    }
    let mut grad = RealMatrix::zeros(b, c);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[y];
        let g = grad.row_mut(i);
        for (k, gk) in g.iter_mut().enumerate() {
            let p = (row[k] - log_z).exp();
            *gk = (p - if k == y { 1.0 } else { 0.0 }) / b as f64;
        }
    }
    Ok((total / b as f64, grad))
}

/// Mean over the batch of `−log softmax(logits)[label]`.
pub fn cross_entropy(logits: &RealMatrix, labels: &[usize]) -> Result<f64> {
    cross_entropy_with_grad(logits, labels).map(|(l, _)| l)
}
