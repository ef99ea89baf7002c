//! A small seeded two-class dataset for smoke tests and demos.

use rand::Rng;

use super::tudataset::DatasetBundle;
use crate::error::Result;
use crate::graph::Graph;
use crate::matrix::RealMatrix;
use crate::rng;

/// `n_graphs` graphs of 4 to 8 nodes with three one-hot node types.
/// Class 0 graphs are cycles whose nodes are mostly type 0; class 1 graphs
/// are stars with extra random chords whose nodes are mostly type 1.
pub fn toy_dataset(n_graphs: usize, seed: u64) -> Result<DatasetBundle> {
    let mut r = rng::seeded(seed);
    let graphs = (0..n_graphs)
        .map(|i| {
            let label = i % 2;
            let n = r.gen_range(4..=8);
            let mut edges = Vec::new();
            if label == 0 {
                edges.extend((0..n).map(|v| (v, (v + 1) % n)));
            } else {
                edges.extend((1..n).map(|v| (0, v)));
                for a in 1..n {
                    for b in (a + 1)..n {
                        if r.gen::<f64>() < 0.2 {
                            edges.push((a, b));
                        }
                    }
                }
            }
            let adjacency = Graph::from_edges(n, &edges)?.adjacency().clone();
            let mut x = RealMatrix::zeros(n, 3);
            for v in 0..n {
                let t = if r.gen::<f64>() < 0.7 { label } else { r.gen_range(0..3) };
                x[(v, t)] = 1.0;
            }
            Graph::new(adjacency, x, label)
        })
        .collect::<Result<Vec<_>>>()?;
    DatasetBundle::from_graphs("TOY", graphs)
}
