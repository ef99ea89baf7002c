mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use qsf_core::connection::{qubit_connection_matrix, ConnectionMatrix};
use qsf_core::matrix::{ComplexMatrix, RealMatrix};
use qsf_core::qsim::{PhaseGateKind, QsfCircuit};
use qsf_core::spectral::{
    jacobi_eigendecomposition, offdiag_loss, offdiag_loss_and_gradient, optimize_eigenspace,
    optimize_eigenspace_observed, recovered_eigenvalues, EigenApproxConfig, GradientMethod,
};
use qsf_core::{erdos_renyi, normalized_laplacian, rng, Graph};
use rand::Rng;

fn random_laplacian(n: usize, p: f64, seed: u64) -> (Graph, RealMatrix) {
    let g = erdos_renyi(n, p, &mut rng::seeded(seed)).unwrap();
    let l = normalized_laplacian(&g);
    (g, l)
}

#[test]
fn p3_spectrum_by_hand_and_by_nalgebra() {
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let l = normalized_laplacian(&g);
    // det(L − λI) = −λ(λ − 1)(λ − 2) for the normalized P3 Laplacian.
    let eig = jacobi_eigendecomposition(&l).unwrap();
    for (got, want) in eig.values.iter().zip([0.0, 1.0, 2.0]) {
        assert!((got - want).abs() < 1e-10);
    }
    let dense = DMatrix::from_row_slice(3, 3, l.as_slice());
    let mut reference: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
    reference.sort_by(f64::total_cmp);
    for (a, b) in eig.values.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn jacobi_agrees_with_nalgebra_on_random_laplacians() {
    for n in [2usize, 5, 8, 13, 16] {
        let (_, l) = random_laplacian(n, 0.4, n as u64);
        let eig = jacobi_eigendecomposition(&l).unwrap();
        let mut reference: Vec<f64> = DMatrix::from_row_slice(n, n, l.as_slice())
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        reference.sort_by(f64::total_cmp);
        for (a, b) in eig.values.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn laplacian_spectrum_in_unit_interval_times_two() {
    let mut r = rng::seeded(8);
    for _ in 0..40 {
        let n = r.gen_range(1..=64);
        let p = r.gen_range(0.0..1.0);
        let g = erdos_renyi(n, p, &mut r).unwrap();
        let l = normalized_laplacian(&g);
        assert!(l.is_symmetric(1e-12));
        for v in jacobi_eigendecomposition(&l).unwrap().values {
            assert!((-1e-9..=2.0 + 1e-9).contains(&v), "eigenvalue {v}");
        }
    }
}

#[test]
fn offdiag_loss_examples() {
    let k2 = RealMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
    assert_eq!(offdiag_loss(&ComplexMatrix::identity(2), &k2).unwrap(), 2.0);
    assert!(offdiag_loss(&ComplexMatrix::identity(3), &k2).is_err());
}

#[test]
fn jacobi_vectors_zero_the_loss() {
    for n in [2usize, 4, 8, 16] {
        for seed in 0..5 {
            let (_, l) = random_laplacian(n, 0.3 + 0.1 * seed as f64, 100 + seed);
            let eig = jacobi_eigendecomposition(&l).unwrap();
            let loss = offdiag_loss(&eig.vectors.to_complex(), &l).unwrap();
            assert!(loss < 1e-18, "n={n} loss={loss:e}");
        }
    }
}

fn random_circuit(n: usize, layers: usize, seed: u64) -> QsfCircuit {
    let mut r = rng::seeded(seed);
    let mut c = QsfCircuit::build(
        &ConnectionMatrix::dense(n),
        &qsf_core::connection::PhaseMatrix::zeros(n),
        layers,
        PhaseGateKind::Crz,
        &mut r,
    )
    .unwrap();
    for p in c.params_mut() {
        *p = r.gen_range(-3.0..3.0);
    }
    c
}

#[test]
fn offdiag_loss_matches_triple_loop() {
    let mut r = rng::seeded(12);
    let mut l = RealMatrix::zeros(8, 8);
    for i in 0..8 {
        for j in 0..=i {
            let v = r.gen_range(-1.0..1.0);
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    let u = random_circuit(3, 3, 13).unitary().unwrap();
    let fast = offdiag_loss(&u, &l).unwrap();
    let naive = naive_offdiag_loss(&u, &l);
    assert!((fast - naive).abs() < 1e-12);
    // ‖L‖_F² − Σ d_i² identity
    let diag = qsf_core::spectral::conjugated_diagonal(&u, &l).unwrap();
    let alt = l.frobenius_norm_sq() - diag.iter().map(|d| d * d).sum::<f64>();
    assert!((fast - alt).abs() < 1e-12);
}

#[test]
fn eigen_gradient_adjoint_matches_finite_differences() {
    for (n, layers, seed) in [(2usize, 1usize, 1u64), (3, 2, 2), (4, 2, 3)] {
        let (_, l) = random_laplacian(1 << n, 0.5, seed);
        let c = random_circuit(n, layers, seed + 10);
        let (la, ga) = offdiag_loss_and_gradient(&c, &l, GradientMethod::Adjoint).unwrap();
        let (lf, gf) = offdiag_loss_and_gradient(&c, &l, GradientMethod::FiniteDifference { step: 1e-5 }).unwrap();
        assert_eq!(la, lf);
        for (a, f) in ga.iter().zip(&gf) {
            assert!(rel_err(*a, *f) < 1e-4, "{a} vs {f}");
        }
    }
}

#[test]
fn empty_graph_has_zero_loss_throughout() {
    let l = RealMatrix::zeros(8, 8);
    let m = qubit_connection_matrix(&RealMatrix::zeros(8, 8), 3).unwrap();
    let cfg = EigenApproxConfig { n_layers: 2, iterations: 20, ..Default::default() };
    let (_, trace) = optimize_eigenspace(&l, &m, &cfg).unwrap();
    assert_eq!(trace.len(), 20);
    assert!(trace.0.iter().all(|&v| v == 0.0));
}

#[test]
fn optimization_trace_properties() {
    let (g, l) = random_laplacian(8, 0.3, 42);
    let m = qubit_connection_matrix(g.adjacency(), 3).unwrap();
    let cfg = EigenApproxConfig { n_layers: 6, iterations: 150, learning_rate: 0.01, alpha_init: 0.5, seed: 7, ..Default::default() };
    let trace_l = l.trace();
    let mut max_trace_err = 0.0f64;
    let (circuit, trace) = optimize_eigenspace_observed(&l, &m, &cfg, |_, c, _| {
        let d = recovered_eigenvalues(c, &l).unwrap();
        max_trace_err = max_trace_err.max((d.iter().sum::<f64>() - trace_l).abs());
    })
    .unwrap();
    assert!(max_trace_err < 1e-9);
    assert_eq!(trace.len(), 150);
    assert!(trace.0.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(trace.running_min().windows(2).all(|w| w[1] <= w[0]));
    assert!(trace.last().unwrap() <= trace.initial().unwrap());
    // the returned circuit is the one the last trace entry was measured at
    let last = offdiag_loss(&circuit.unitary().unwrap(), &l).unwrap();
    assert_eq!(last, trace.last().unwrap());

    let (_, again) = optimize_eigenspace(&l, &m, &cfg).unwrap();
    assert_eq!(again, trace);
}

#[test]
fn identity_circuit_returns_sorted_diagonal() {
    let (_, l) = random_laplacian(4, 0.6, 5);
    let identity = QsfCircuit::from_gates(2, vec![], vec![]).unwrap();
    let mut diag: Vec<f64> = (0..4).map(|i| l[(i, i)]).collect();
    diag.sort_by(f64::total_cmp);
    assert_eq!(recovered_eigenvalues(&identity, &l).unwrap(), diag);
}

#[test]
fn converged_k4_run_recovers_spectrum() {
    let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    let l = normalized_laplacian(&g);
    let m = qubit_connection_matrix(g.adjacency(), 2).unwrap();
    let cfg = EigenApproxConfig { n_layers: 4, iterations: 500, ..Default::default() };
    let (circuit, trace) = optimize_eigenspace(&l, &m, &cfg).unwrap();
    let got = recovered_eigenvalues(&circuit, &l).unwrap();
    let want = jacobi_eigendecomposition(&l).unwrap().values;
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 0.05, "{got:?} vs {want:?}");
    }
    if trace.last().unwrap() < 1e-6 {
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}

#[test]
fn capacity_and_shape_errors() {
    let l = RealMatrix::zeros(6, 6);
    let m = ConnectionMatrix::zeros(3);
    assert!(optimize_eigenspace(&l, &m, &EigenApproxConfig::default()).is_err());
    let cfg = EigenApproxConfig { iterations: 0, ..Default::default() };
    assert!(optimize_eigenspace(&RealMatrix::zeros(8, 8), &m, &cfg).is_err());
    assert!(optimize_eigenspace(&RealMatrix::zeros(4, 4), &m, &EigenApproxConfig::default()).is_err());
}

#[test]
fn k4_connection_matches_brute_force() {
    let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
    let m = qubit_connection_matrix(g.adjacency(), 2).unwrap();
    assert_eq!(m.entries(), &naive_connection(g.adjacency(), 2));
}

#[test]
fn connection_symmetric_for_every_small_graph() {
    for n in 1..=4usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| *e).collect();
            let g = Graph::from_edges(n, &edges).unwrap();
            for n_q in [2usize, 3] {
                let m = qubit_connection_matrix(g.adjacency(), n_q).unwrap();
                assert!(m.entries().is_symmetric(0.0));
                assert!(m.entries().as_slice().iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn connection_matches_naive_reference(seed in any::<u64>(), bits in 1usize..=5, p in 0.0f64..1.0) {
        let n = 1usize << bits;
        let g = erdos_renyi(n, p, &mut rng::seeded(seed)).unwrap();
        let fast = qubit_connection_matrix(g.adjacency(), bits).unwrap();
        let naive = naive_connection(g.adjacency(), bits);
        prop_assert!(fast.entries().max_abs_diff(&naive) < 1e-12);
    }

    #[test]
    fn connection_is_linear_in_weights(seed in any::<u64>()) {
        let g = erdos_renyi(16, 0.4, &mut rng::seeded(seed)).unwrap();
        let single = qubit_connection_matrix(g.adjacency(), 4).unwrap();
        let doubled = qubit_connection_matrix(&g.adjacency().scale(2.0), 4).unwrap();
        for (a, b) in single.entries().as_slice().iter().zip(doubled.entries().as_slice()) {
            prop_assert_eq!(2.0 * a, *b);
        }
    }
}
