//! Graphs, the normalized Laplacian, zero padding and Erdős–Rényi sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// An undirected graph sample: symmetric non-negative adjacency with an empty
/// diagonal, one feature row per node, and a class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    adjacency: RealMatrix,
    node_features: RealMatrix,
    label: usize,
}

impl Graph {
    pub fn new(adjacency: RealMatrix, node_features: RealMatrix, label: usize) -> Result<Self> {
        let n = adjacency.rows();
        if !adjacency.is_square() {
            return Err(Error::dim(format!(
                "adjacency must be square, got {}x{}",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        if node_features.rows() != n {
            return Err(Error::dim(format!(
                "{} feature rows for {n} nodes",
                node_features.rows()
            )));
        }
        for i in 0..n {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("self-loop on node {i}")));
            }
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "adjacency[{i},{j}] = {w} is not a finite non-negative weight"
                    )));
                }
                if w != adjacency[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "adjacency is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            adjacency,
            node_features,
            label,
        })
    }

    /// A graph with no node features (feature dimension 0).
    pub fn from_adjacency(adjacency: RealMatrix) -> Result<Self> {
        let n = adjacency.rows();
        Self::new(adjacency, RealMatrix::zeros(n, 0), 0)
    }

    /// Builds an unweighted graph on `n` nodes from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = RealMatrix::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({i},{j}) out of range for {n} nodes"
                )));
            }
            if i != j {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
        Self::from_adjacency(a)
    }

    pub fn adjacency(&self) -> &RealMatrix {
        &self.adjacency
    }

    pub fn node_features(&self) -> &RealMatrix {
        &self.node_features
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.node_features.cols()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n_nodes())
            .map(|i| self.adjacency.row(i).iter().sum())
            .collect()
    }

    pub fn isolated_nodes(&self) -> Vec<usize> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `L = I − D^{−1/2} A D^{−1/2}`.
///
/// Isolated nodes get an all-zero row and column (their `D^{−1/2}` is taken as
/// zero and the identity entry is dropped), which keeps `L` symmetric positive
/// semi-definite with spectrum in `[0, 2]`.
pub fn normalized_laplacian(graph: &Graph) -> RealMatrix {
    let n = graph.n_nodes();
    let inv_sqrt: Vec<f64> = graph
        .degrees()
        .into_iter()
        .map(|d| if d > 0.0 { d.sqrt().recip() } else { 0.0 })
        .collect();
    let a = graph.adjacency();
    let mut l = RealMatrix::zeros(n, n);
    for i in 0..n {
        if inv_sqrt[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            let off = -inv_sqrt[i] * a[(i, j)] * inv_sqrt[j];
            l[(i, j)] = if i == j { 1.0 + off } else { off };
        }
    }
    l
}

/// G(n, p): every unordered pair `i < j` becomes an edge independently with
/// probability `edge_prob`. Pairs are visited in row-major order so a given
/// generator state always yields the same graph.
pub fn erdos_renyi<R: Rng + ?Sized>(n_nodes: usize, edge_prob: f64, rng: &mut R) -> Result<Graph> {
    if n_nodes == 0 {
        return Err(Error::InvalidInput("erdos_renyi needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidInput(format!(
            "edge probability {edge_prob} outside [0, 1]"
        )));
    }
    let mut a = RealMatrix::zeros(n_nodes, n_nodes);
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            // gen::<f64>() lies in [0, 1), so p = 0 never and p = 1 always connects.
            if rng.gen::<f64>() < edge_prob {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    Graph::from_adjacency(a)
}

/// Extends adjacency and feature matrices with zero rows/columns.
pub fn pad_graph(graph: &Graph, target_nodes: usize, target_feat_dim: usize) -> Result<Graph> {
    let n = graph.n_nodes();
    let d = graph.feature_dim();
    if target_nodes < n || target_feat_dim < d {
        return Err(Error::dim(format!(
            "cannot pad a {n}-node, {d}-feature graph down to {target_nodes} nodes, {target_feat_dim} features"
        )));
    }
    if !target_nodes.is_power_of_two() || !target_feat_dim.is_power_of_two() {
        return Err(Error::dim(format!(
            "padding targets must be powers of two, got ({target_nodes}, {target_feat_dim})"
        )));
    }
    let mut a = RealMatrix::zeros(target_nodes, target_nodes);
    let mut x = RealMatrix::zeros(target_nodes, target_feat_dim);
    for i in 0..n {
        a.row_mut(i)[..n].copy_from_slice(graph.adjacency.row(i));
        x.row_mut(i)[..d].copy_from_slice(graph.node_features.row(i));
    }
    Ok(Graph {
        adjacency: a,
        node_features: x,
        label: graph.label,
    })
}
