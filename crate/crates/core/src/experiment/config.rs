//! Experiment configuration, stored as a JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DEFAULT_NOISE_RANGE;
use crate::error::{Error, Result};
use crate::head::HeadConfig;
use crate::qsim::{parameter_count, Connectivity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EigenApprox,
    Train,
    Cv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// TUDataset name, the file prefix inside the dataset directory.
    pub name: String,
    /// Directory holding `<name>_A.txt` and friends.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub minmax_attributes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSpec {
    /// Register size; derived from the dataset when absent.
    pub n_qubits: Option<usize>,
    pub n_layers: usize,
    pub hidden: [usize; 2],
    pub dropout: f64,
    pub alpha_init: f64,
    pub noise_range: (f64, f64),
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            n_qubits: None,
            n_layers: 4,
            hidden: [32, 16],
            dropout: 0.25,
            alpha_init: 0.1,
            noise_range: DEFAULT_NOISE_RANGE,
        }
    }
}

impl ModelSpec {
    pub fn head_config(&self, n_qubits: usize, n_classes: usize) -> HeadConfig {
        HeadConfig {
            dropout: self.dropout,
            ..HeadConfig::new(n_qubits, self.hidden[0], self.hidden[1], n_classes)
        }
    }

    /// Quantum plus classical parameter count for a dense, noise-connected
    /// circuit.
    pub fn parameter_count(&self, n_qubits: usize, n_classes: usize) -> usize {
        parameter_count(n_qubits, self.n_layers, Connectivity::Dense)
            + self.head_config(n_qubits, n_classes).parameter_count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSpec {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
    pub folds: usize,
    pub val_fraction: f64,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs: 50,
            learning_rate: 0.01,
            weight_decay: 1e-5,
            scheduler_factor: 0.1,
            scheduler_patience: 15,
            folds: 10,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSpec {
    pub qubits: Vec<usize>,
    pub layers: Vec<usize>,
    pub graphs: usize,
    pub edge_prob: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub alpha_init: f64,
}

impl Default for EigenSpec {
    fn default() -> Self {
        Self {
            qubits: vec![2, 3, 4],
            layers: vec![4, 8, 20],
            graphs: 10,
            edge_prob: 0.3,
            iterations: 500,
            learning_rate: 0.01,
            alpha_init: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub dataset: Option<DatasetSpec>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub eigen: Option<EigenSpec>,
}

fn default_seed() -> u64 {
    42
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: default_seed(),
            output_dir: None,
            dataset: None,
            model: ModelSpec::default(),
            training: TrainingSpec::default(),
            eigen: (kind == ExperimentKind::EigenApprox).then(EigenSpec::default),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.n_layers == 0 && self.kind != ExperimentKind::EigenApprox {
            return Err(Error::Config("n_layers must be at least 1".into()));
        }
        if m.hidden.contains(&0) {
            return Err(Error::Config("hidden sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&m.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", m.dropout)));
        }
        if !(0.0..=1.0).contains(&m.alpha_init) {
            return Err(Error::Config(format!("alpha_init {} outside [0, 1]", m.alpha_init)));
        }
        let (lo, hi) = m.noise_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("noise range ({lo}, {hi}) must satisfy 0 < low <= high")));
        }
        let t = &self.training;
        if t.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if t.batch_size < 2 {
            return Err(Error::Config(format!("batch_size must be at least 2, got {}", t.batch_size)));
        }
        positive("learning_rate", t.learning_rate)?;
        positive("scheduler_factor", t.scheduler_factor)?;
        if t.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if t.folds < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {}", t.folds)));
        }
        if !(t.val_fraction > 0.0 && t.val_fraction < 1.0) {
            return Err(Error::Config(format!("val_fraction {} outside (0, 1)", t.val_fraction)));
        }
        match self.kind {
            ExperimentKind::EigenApprox => {
                let e = self
                    .eigen
                    .as_ref()
                    .ok_or_else(|| Error::Config("eigen-approx needs an `eigen` section".into()))?;
                if e.qubits.is_empty() || e.layers.is_empty() {
                    return Err(Error::Config("eigen qubits and layers lists must be non-empty".into()));
                }
                if e.qubits.iter().any(|&q| q == 0 || q > crate::qsim::MATRIX_MODE_MAX_QUBITS) {
                    return Err(Error::Config(format!(
                        "eigen qubit counts must be in 1..={}",
                        crate::qsim::MATRIX_MODE_MAX_QUBITS
                    )));
                }
                if e.graphs == 0 || e.iterations == 0 {
                    return Err(Error::Config("eigen graphs and iterations must be at least 1".into()));
                }
                if !(0.0..=1.0).contains(&e.edge_prob) {
                    return Err(Error::Config(format!("edge_prob {} outside [0, 1]", e.edge_prob)));
                }
                positive("eigen learning_rate", e.learning_rate)?;
                if !(0.0..=1.0).contains(&e.alpha_init) {
                    return Err(Error::Config(format!("eigen alpha_init {} outside [0, 1]", e.alpha_init)));
                }
            }
            ExperimentKind::Train | ExperimentKind::Cv => {
                if self.dataset.is_none() {
                    return Err(Error::Config("a dataset section is required".into()));
                }
            }
        }
        Ok(())
    }
}

/// A reference classification run as a runnable recipe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetPreset {
    pub dataset: &'static str,
    pub n_layers: usize,
    pub n_qubits: usize,
    pub batch_size: usize,
    pub n_classes: usize,
    pub expected_params: usize,
    /// Reference mean and standard deviation of test accuracy.
    pub reported: (f64, f64),
}

impl DatasetPreset {
    pub fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Cv);
        cfg.dataset = Some(DatasetSpec {
            name: self.dataset.to_string(),
            path: None,
            minmax_attributes: false,
        });
        cfg.model.n_qubits = Some(self.n_qubits);
        cfg.model.n_layers = self.n_layers;
        cfg.training.batch_size = self.batch_size;
        cfg
    }

    pub fn parameter_count(&self) -> usize {
        self.config().model.parameter_count(self.n_qubits, self.n_classes)
    }
}

macro_rules! preset {
    ($name:expr, $layers:expr, $q:expr, $bs:expr, $c:expr, $p:expr, $m:expr, $s:expr) => {
        DatasetPreset {
            dataset: $name,
            n_layers: $layers,
            n_qubits: $q,
            batch_size: $bs,
            n_classes: $c,
            expected_params: $p,
            reported: ($m, $s),
        }
    };
}

/// Reference classification runs. MSRC_9 uses 8 head outputs, which its
/// parameter total of 1512 requires.
pub const DATASET_PRESETS: &[DatasetPreset] = &[
    preset!("AIDS", 4, 12, 32, 2, 1650, 0.9965, 0.0039),
    preset!("BZR", 4, 12, 16, 2, 1650, 0.8151, 0.0578),
    preset!("COX2", 4, 12, 32, 2, 1650, 0.7535, 0.0528),
    preset!("MUTAG", 4, 8, 16, 2, 1202, 0.8465, 0.0790),
    preset!("MUTAG", 1, 8, 16, 2, 1010, 0.8412, 0.0773),
    preset!("PROTEINS", 4, 12, 32, 2, 1650, 0.6703, 0.0457),
    preset!("PROTEINS_full", 4, 15, 32, 2, 2070, 0.7125, 0.0361),
    preset!("ENZYMES", 4, 12, 32, 6, 1718, 0.3300, 0.1035),
    preset!("Letter-high", 4, 5, 32, 15, 1171, 0.9324, 0.0213),
    preset!("Letter-med", 4, 5, 32, 15, 1171, 0.9227, 0.0183),
    preset!("Letter-low", 4, 4, 32, 15, 1103, 0.9471, 0.0158),
    preset!("DHFR", 4, 12, 32, 2, 1650, 0.7395, 0.0506),
    preset!("MSRC_9", 4, 10, 16, 8, 1512, 0.7512, 0.0709),
];

pub fn preset(dataset: &str, n_layers: usize) -> Option<&'static DatasetPreset> {
    DATASET_PRESETS
        .iter()
        .find(|p| p.dataset.eq_ignore_ascii_case(dataset) && p.n_layers == n_layers)
}
