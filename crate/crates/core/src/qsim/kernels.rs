//! In-place gate kernels on dense amplitude storage.
//!
//! Qubit `q` of an `n`-qubit register is bit `n − 1 − q` of the basis index,
//! so qubit 0 is the most significant bit.
//!
//! Every kernel works on a block of `width` states stored row-major: basis
//! row `i` occupies `amps[i * width..(i + 1) * width]`. A single statevector
//! has width 1; a full unitary (columns = images of the basis states) has
//! width `2^n`.

use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub fn qubit_mask(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

#[inline]
fn masks(n_qubits: usize, control: Option<usize>, target: usize) -> (usize, usize) {
    (
        qubit_mask(n_qubits, target),
        control.map_or(0, |c| qubit_mask(n_qubits, c)),
    )
}

/// Applies `m` to `target`, restricted to basis rows where `control` (if any)
/// is 1.
pub fn apply_2x2(
    amps: &mut [Complex64],
    width: usize,
    n_qubits: usize,
    control: Option<usize>,
    target: usize,
    m: &Mat2,
) {
    let (tmask, cmask) = masks(n_qubits, control, target);
    let dim = 1usize << n_qubits;
    debug_assert_eq!(amps.len(), dim * width);
    for i0 in 0..dim {
        if i0 & tmask != 0 || i0 & cmask != cmask {
            continue;
        }
        let i1 = i0 | tmask;
        // i0 < i1, so the split hands out disjoint rows.
        let (lo, hi) = amps.split_at_mut(i1 * width);
        let r0 = &mut lo[i0 * width..(i0 + 1) * width];
        let r1 = &mut hi[..width];
        for (a0, a1) in r0.iter_mut().zip(r1.iter_mut()) {
            let (x0, x1) = (*a0, *a1);
            *a0 = m[0][0] * x0 + m[0][1] * x1;
            *a1 = m[1][0] * x0 + m[1][1] * x1;
        }
    }
}

/// `diag(d0, d1)` on `target`, restricted to control-1 rows.
pub fn apply_diag(
    amps: &mut [Complex64],
    width: usize,
    n_qubits: usize,
    control: Option<usize>,
    target: usize,
    d0: Complex64,
    d1: Complex64,
) {
    let (tmask, cmask) = masks(n_qubits, control, target);
    for (i, row) in amps.chunks_exact_mut(width).enumerate() {
        if i & cmask != cmask {
            continue;
        }
        let d = if i & tmask == 0 { d0 } else { d1 };
        row.iter_mut().for_each(|a| *a *= d);
    }
}

/// `Σ_columns ⟨λ| D |ψ⟩` where `D` acts as `dm` on `target` within the
/// control-1 subspace and as zero elsewhere: the contraction needed for the
/// derivative of a (controlled) one-parameter gate.
pub fn derivative_overlap(
    lambda: &[Complex64],
    psi: &[Complex64],
    width: usize,
    n_qubits: usize,
    control: Option<usize>,
    target: usize,
    dm: &Mat2,
) -> Complex64 {
    let (tmask, cmask) = masks(n_qubits, control, target);
    let dim = 1usize << n_qubits;
    let mut acc = ZERO;
    for i0 in 0..dim {
        if i0 & tmask != 0 || i0 & cmask != cmask {
            continue;
        }
        let i1 = i0 | tmask;
        let p0 = &psi[i0 * width..(i0 + 1) * width];
        let p1 = &psi[i1 * width..(i1 + 1) * width];
        let l0 = &lambda[i0 * width..(i0 + 1) * width];
        let l1 = &lambda[i1 * width..(i1 + 1) * width];
        for k in 0..width {
            let d0 = dm[0][0] * p0[k] + dm[0][1] * p1[k];
            let d1 = dm[1][0] * p0[k] + dm[1][1] * p1[k];
            acc += l0[k].conj() * d0 + l1[k].conj() * d1;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    const X: Mat2 = [[ZERO, Complex64::new(1.0, 0.0)], [Complex64::new(1.0, 0.0), ZERO]];

    #[test]
    fn x_gate_on_msb() {
        // |00> -> |10> when flipping qubit 0 (the MSB).
        let mut amps = vec![c(1.0), ZERO, ZERO, ZERO];
        apply_2x2(&mut amps, 1, 2, None, 0, &X);
        assert_eq!(amps, vec![ZERO, ZERO, c(1.0), ZERO]);
    }

    #[test]
    fn controlled_respects_control() {
        let mut amps = vec![c(1.0), ZERO, ZERO, ZERO];
        apply_2x2(&mut amps, 1, 2, Some(0), 1, &X);
        assert_eq!(amps[0], c(1.0));
        // |10> -> |11>
        let mut amps = vec![ZERO, ZERO, c(1.0), ZERO];
        apply_2x2(&mut amps, 1, 2, Some(0), 1, &X);
        assert_eq!(amps[3], c(1.0));
    }

    #[test]
    fn diag_matches_general() {
        let d0 = Complex64::from_polar(1.0, 0.3);
        let d1 = Complex64::from_polar(1.0, -1.1);
        let init: Vec<Complex64> = (0..8).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let mut a = init.clone();
        let mut b = init;
        apply_diag(&mut a, 1, 3, Some(2), 1, d0, d1);
        apply_2x2(&mut b, 1, 3, Some(2), 1, &[[d0, ZERO], [ZERO, d1]]);
        assert_eq!(a, b);
    }

    #[test]
    fn wide_block_is_columnwise() {
        // Two columns evolve independently.
        let mut block = vec![c(1.0), ZERO, ZERO, c(1.0)];
        apply_2x2(&mut block, 2, 1, None, 0, &X);
        assert_eq!(block, vec![ZERO, c(1.0), c(1.0), ZERO]);
    }
}
