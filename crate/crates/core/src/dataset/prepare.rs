//! Classical preprocessing: padding, amplitude encoding and the per-graph
//! connection and phase matrices.

use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tudataset::DatasetBundle;
use crate::connection::{add_connection_noise, mix_phases, qubit_connection_matrix, random_phases, ConnectionMatrix, PhaseMatrix};
use crate::error::{Error, Result};
use crate::graph::pad_graph;
use crate::matrix::RealMatrix;
use crate::qsim::{amplitude_encode, StateVector};
use crate::rng;

pub const DEFAULT_NOISE_RANGE: (f64, f64) = (0.001, 0.01);

fn bits(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize
}

/// Qubits needed to hold `next_pow2(max_nodes) · next_pow2(feature_dim)`
/// amplitudes, at least one.
pub fn required_qubits(bundle: &DatasetBundle) -> usize {
    (bits(bundle.max_nodes) + bits(bundle.feature_dim)).max(1)
}

/// Qubits addressing the node index. These are the most significant ones.
pub fn node_qubits(bundle: &DatasetBundle) -> usize {
    bits(bundle.max_nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepareParams {
    pub n_qubits: usize,
    pub alpha_init: f64,
    pub noise_range: (f64, f64),
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedSample {
    pub encoded_state: StateVector,
    /// Graph connection matrix with noise added, `n_q × n_q`.
    pub connection: ConnectionMatrix,
    /// `(1 − α)·rand + α·connection`, with `rand` shared across samples.
    pub phase_init: PhaseMatrix,
    pub label: usize,
}

impl PreparedSample {
    /// The graph-dependent part of the phase, `α·connection`.
    pub fn phase_offset(&self, alpha_init: f64) -> RealMatrix {
        self.connection.entries().scale(alpha_init)
    }
}

/// The dataset-wide random phase draw used by every sample and by the model's
/// initial learnable phases.
pub fn shared_random_phases(n_q: usize, seed: u64) -> RealMatrix {
    random_phases(n_q, &mut rng::stream(seed, 0))
}

/// `prepare_samples`: pads each graph to `2^{n_q}` amplitudes (node-major),
/// encodes it, and derives its noisy connection and initial phase matrices.
/// Sample `i` draws its noise from stream `i + 1` of `seed`, so the result
/// does not depend on thread scheduling.
pub fn prepare_samples(bundle: &DatasetBundle, params: &PrepareParams) -> Result<Vec<PreparedSample>> {
    let n_q = params.n_qubits;
    let needed = required_qubits(bundle);
    if n_q < needed || n_q >= usize::BITS as usize {
        return Err(Error::Capacity(format!(
            "{} needs {needed} qubits ({} nodes × {} features after padding) but {n_q} are configured",
            bundle.name,
            1usize << bits(bundle.max_nodes),
            1usize << bits(bundle.feature_dim)
        )));
    }
    let node_bits = node_qubits(bundle);
    let padded_nodes = 1usize << node_bits;
    let padded_feats = 1usize << (n_q - node_bits);
    let (low, high) = params.noise_range;
    let shared = shared_random_phases(n_q, params.seed);

    bundle
        .graphs
        .par_iter()
        .enumerate()
        .map(|(i, graph)| {
            let padded = pad_graph(graph, padded_nodes, padded_feats)?;
            let encoded_state = amplitude_encode(padded.node_features().as_slice())?;
            let conn = qubit_connection_matrix(padded.adjacency(), node_bits)?.embed(n_q)?;
            let connection = add_connection_noise(&conn, low, high, &mut rng::stream(params.seed, i as u64 + 1))?;
            let phase_init = mix_phases(&connection, &shared, params.alpha_init)?;
            Ok(PreparedSample {
                encoded_state,
                connection,
                phase_init,
                label: graph.label(),
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    fingerprint: u64,
    params: PrepareParams,
    samples: Vec<PreparedSample>,
}

fn fingerprint(bundle: &DatasetBundle) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bundle.name.hash(&mut h);
    for g in &bundle.graphs {
        g.label().hash(&mut h);
        for v in g.adjacency().as_slice().iter().chain(g.node_features().as_slice()) {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

pub fn cache_path(dir: &Path, bundle: &DatasetBundle, params: &PrepareParams) -> PathBuf {
    dir.join(format!(
        "{}_q{}_a{}_n{}-{}_s{}.json",
        bundle.name, params.n_qubits, params.alpha_init, params.noise_range.0, params.noise_range.1, params.seed
    ))
}

/// [`prepare_samples`] with an optional on-disk cache. A cache entry is used
/// only if it was built from the same dataset contents and parameters.
pub fn prepare_samples_cached(
    bundle: &DatasetBundle,
    params: &PrepareParams,
    cache_dir: Option<&Path>,
) -> Result<Vec<PreparedSample>> {
    let Some(dir) = cache_dir else {
        return prepare_samples(bundle, params);
    };
    let path = cache_path(dir, bundle, params);
    let fp = fingerprint(bundle);
    if let Ok(text) = fs::read_to_string(&path) {
        match serde_json::from_str::<CacheFile>(&text) {
            Ok(c) if c.fingerprint == fp && c.params == *params => {
                log::info!("loaded prepared samples from {}", path.display());
                return Ok(c.samples);
            }
            _ => log::warn!("ignoring stale sample cache {}", path.display()),
        }
    }
    let samples = prepare_samples(bundle, params)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file = CacheFile {
        fingerprint: fp,
        params: *params,
        samples,
    };
    fs::write(&path, serde_json::to_string(&file)?).map_err(|e| Error::io(&path, e))?;
    Ok(file.samples)
}
