//! The eigenspace-approximation study over random graphs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EigenSpec, ExperimentConfig, ExperimentKind};
use crate::connection::qubit_connection_matrix;
use crate::error::{Error, Result};
use crate::graph::{erdos_renyi, normalized_laplacian, Graph};
use crate::rng;
use crate::spectral::{optimize_eigenspace, EigenApproxConfig, LossTrace};

/// A trace is called stalled when it ends above this fraction of its start
/// and above [`STALL_FLOOR`].
pub const STALL_RATIO: f64 = 0.5;
pub const STALL_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCell {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub traces: Vec<LossTrace>,
    /// Iteration-wise mean over graphs.
    pub mean_trace: Vec<f64>,
    pub mean_final_loss: f64,
    pub stalled_graphs: Vec<usize>,
    /// Graphs with at least one isolated node.
    pub isolated_graphs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub cells: Vec<EigenCell>,
    pub config: ExperimentConfig,
}

impl EigenReport {
    pub fn cell(&self, n_qubits: usize, n_layers: usize) -> Option<&EigenCell> {
        self.cells
            .iter()
            .find(|c| c.n_qubits == n_qubits && c.n_layers == n_layers)
    }
}

/// Graph `index` of the study at a given register size. The same graphs are
/// used for every layer count.
pub fn study_graph(n_qubits: usize, index: usize, spec: &EigenSpec, seed: u64) -> Result<Graph> {
    erdos_renyi(1 << n_qubits, spec.edge_prob, &mut rng::stream(seed, index as u64))
}

fn run_one(n_qubits: usize, n_layers: usize, g: usize, spec: &EigenSpec, seed: u64) -> Result<(LossTrace, bool)> {
    let graph = study_graph(n_qubits, g, spec, seed)?;
    let l = normalized_laplacian(&graph);
    let m = qubit_connection_matrix(graph.adjacency(), n_qubits)?;
    let cfg = EigenApproxConfig {
        n_layers,
        iterations: spec.iterations,
        learning_rate: spec.learning_rate,
        alpha_init: spec.alpha_init,
        seed: seed.wrapping_add(g as u64),
        ..Default::default()
    };
    let (_, trace) = optimize_eigenspace(&l, &m, &cfg)?;
    Ok((trace, !graph.isolated_nodes().is_empty()))
}

/// `run_eigen_experiment`: every (qubits, layers) cell on `spec.graphs`
/// seeded Erdős–Rényi graphs.
pub fn run_eigen_experiment(config: &ExperimentConfig) -> Result<EigenReport> {
    if config.kind != ExperimentKind::EigenApprox {
        return Err(Error::Config("not an eigen-approx configuration".into()));
    }
    config.validate()?;
    let spec = config.eigen.as_ref().expect("validated");
    if spec.layers.contains(&0) {
        return Err(Error::Config("layer counts must be at least 1".into()));
    }
    let cells: Vec<(usize, usize)> = spec
        .qubits
        .iter()
        .flat_map(|&q| spec.layers.iter().map(move |&l| (q, l)))
        .collect();
    let jobs: Vec<(usize, usize, usize)> = cells
        .iter()
        .flat_map(|&(q, l)| (0..spec.graphs).map(move |g| (q, l, g)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(q, l, g)| {
            run_one(q, l, g, spec, config.seed).map_err(|e| Error::EigenCell {
                n_qubits: q,
                n_layers: l,
                graph: g,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(cells.len());
    for (c, &(n_qubits, n_layers)) in cells.iter().enumerate() {
        let chunk = &results[c * spec.graphs..(c + 1) * spec.graphs];
        let traces: Vec<LossTrace> = chunk.iter().map(|(t, _)| t.clone()).collect();
        let isolated_graphs: Vec<usize> = chunk.iter().enumerate().filter(|(_, r)| r.1).map(|(g, _)| g).collect();
        let n = traces.len() as f64;
        let mean_trace: Vec<f64> = (0..spec.iterations)
            .map(|i| traces.iter().map(|t| t.0[i]).sum::<f64>() / n)
            .collect();
        let stalled_graphs: Vec<usize> = traces
            .iter()
            .enumerate()
            .filter(|(_, t)| {
                let (first, last) = (t.initial().unwrap_or(0.0), t.last().unwrap_or(0.0));
                last > STALL_RATIO * first && last > STALL_FLOOR
            })
            .map(|(g, _)| g)
            .collect();
        for &g in &stalled_graphs {
            log::warn!(
                "{n_qubits} qubits, {n_layers} layers: graph {g} stalled at loss {:.4}{}",
                traces[g].last().unwrap_or(f64::NAN),
                if isolated_graphs.contains(&g) { " (has isolated nodes)" } else { "" }
            );
        }
        out.push(EigenCell {
            n_qubits,
            n_layers,
            mean_final_loss: *mean_trace.last().expect("iterations >= 1"),
            mean_trace,
            traces,
            stalled_graphs,
            isolated_graphs,
        });
    }
    Ok(EigenReport {
        cells: out,
        config: config.clone(),
    })
}
