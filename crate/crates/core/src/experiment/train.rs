//! Cross-validated training of the hybrid classifier.

use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::model::HybridModel;
use crate::dataset::{
    parse_tudataset_with, prepare_samples_cached, required_qubits, shared_random_phases, stratified_kfold,
    DatasetBundle, Fold, FoldPlan, ParseOptions, PrepareParams, PreparedSample,
};
use crate::error::{Error, Result};
use crate::optim::TrainState;
use crate::qsim::{parameter_count, Connectivity};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    /// Validation accuracy at `best_epoch`.
    pub val_metric: f64,
    pub val_loss: f64,
    pub test_accuracy: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub dataset: String,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub quantum_parameters: usize,
    pub head_parameters: usize,
    pub parameter_count: usize,
    pub folds: Vec<FoldReport>,
    pub mean_val_metric: f64,
    pub mean_test_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_test_accuracy: f64,
    pub config: ExperimentConfig,
}

/// A trained fold: its report row, per-epoch history and selected model.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub report: FoldReport,
    pub history: Vec<EpochRecord>,
    pub model: HybridModel,
    pub test_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CvRun {
    pub report: TrainReport,
    pub outcomes: Vec<FoldOutcome>,
    pub plan: FoldPlan,
}

/// Everything needed to train on one dataset.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub name: String,
    pub samples: Vec<PreparedSample>,
    pub n_qubits: usize,
    pub n_classes: usize,
    pub shared_phases: crate::matrix::RealMatrix,
}

pub fn load_dataset(config: &ExperimentConfig, dir_override: Option<&Path>) -> Result<DatasetBundle> {
    let spec = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("a dataset section is required".into()))?;
    let dir = dir_override
        .map(Path::to_path_buf)
        .or_else(|| spec.path.clone())
        .ok_or_else(|| Error::Config(format!("no directory given for dataset {}", spec.name)))?;
    parse_tudataset_with(
        &dir,
        &spec.name,
        ParseOptions {
            minmax_attributes: spec.minmax_attributes,
        },
    )
}

/// Resolves the register size and prepares (or loads cached) samples.
pub fn prepare_data(config: &ExperimentConfig, bundle: &DatasetBundle, cache_dir: Option<&Path>) -> Result<PreparedData> {
    let n_qubits = config.model.n_qubits.unwrap_or_else(|| required_qubits(bundle));
    let derived = required_qubits(bundle);
    if n_qubits != derived {
        log::info!("{}: using {n_qubits} qubits (data needs {derived})", bundle.name);
    }
    let params = PrepareParams {
        n_qubits,
        alpha_init: config.model.alpha_init,
        noise_range: config.model.noise_range,
        seed: config.seed,
    };
    let samples = prepare_samples_cached(bundle, &params, cache_dir)?;
    Ok(PreparedData {
        name: bundle.name.clone(),
        samples,
        n_qubits,
        n_classes: bundle.n_classes,
        shared_phases: shared_random_phases(n_qubits, config.seed),
    })
}

fn subset<'a>(samples: &'a [PreparedSample], idx: &[usize]) -> Vec<&'a PreparedSample> {
    idx.iter().map(|&i| &samples[i]).collect()
}

/// Validation accuracy first, then lower validation loss; earlier epochs win
/// exact ties.
fn improves(acc: f64, loss: f64, best: Option<(f64, f64)>) -> bool {
    match best {
        None => true,
        Some((best_acc, best_loss)) => acc > best_acc || (acc == best_acc && loss < best_loss),
    }
}

/// Trains a fresh model on `fold.train`, keeps the epoch with the best
/// validation result, and scores it on `fold.test`. The fold's random stream
/// is `seed ⊕ fold_index`.
pub fn train_fold(
    data: &PreparedData,
    fold: &Fold,
    fold_index: usize,
    config: &ExperimentConfig,
) -> Result<FoldOutcome> {
    fold.assert_isolated();
    let started = Instant::now();
    let t = &config.training;
    if fold.val.is_empty() || fold.test.is_empty() {
        return Err(Error::Config("validation and test splits must be non-empty".into()));
    }
    let mut rng = rng::seeded(config.seed ^ fold_index as u64);
    let mut model = HybridModel::new(data.n_qubits, &config.model, data.n_classes, &data.shared_phases, &mut rng)?;
    let mut state = TrainState::new(
        model.n_params(),
        t.learning_rate,
        t.weight_decay,
        t.scheduler_factor,
        t.scheduler_patience,
    );
    let val = subset(&data.samples, &fold.val);
    let test = subset(&data.samples, &fold.test);
    let mut order = fold.train.clone();
    let mut history = Vec::with_capacity(t.epochs);
    let mut best: Option<(f64, f64)> = None;
    let mut best_model = model.clone();
    let mut best_epoch = 0;

    for epoch in 1..=t.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut seen) = (0.0, 0usize);
        for (b, chunk) in order.chunks(t.batch_size).enumerate() {
            // BatchNorm needs at least two samples.
            if chunk.len() < 2 {
                continue;
            }
            let batch = subset(&data.samples, chunk);
            let (loss, grads, cache) = model.loss_and_gradient(&batch, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss(format!("epoch {epoch}, batch {b}: loss {loss}")));
            }
            model.commit_batch_stats(&cache);
            let mut params = model.params();
            let lr = state.lr();
            state
                .optimizer
                .step_named(&mut params, &grads, lr, |i| model.param_label(i))?;
            model.set_params(&params)?;
            loss_sum += loss * chunk.len() as f64;
            seen += chunk.len();
        }
        let (val_loss, val_accuracy) = model.evaluate(&val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss(format!("epoch {epoch}: validation loss {val_loss}")));
        }
        let learning_rate = state.lr();
        state.scheduler.update(val_loss)?;
        history.push(EpochRecord {
            epoch,
            train_loss: if seen > 0 { loss_sum / seen as f64 } else { f64::NAN },
            val_loss,
            val_accuracy,
            learning_rate,
        });
        if improves(val_accuracy, val_loss, best) {
            best = Some((val_accuracy, val_loss));
            best_model = model.clone();
            best_epoch = epoch;
        }
    }
    let (_, test_accuracy) = best_model.evaluate(&test)?;
    let (val_metric, val_loss) = best.expect("at least one epoch");
    log::info!("{} fold {fold_index}: best epoch {best_epoch}, val {val_metric:.4}, test {test_accuracy:.4}", data.name);
    Ok(FoldOutcome {
        report: FoldReport {
            fold: fold_index,
            best_epoch,
            val_metric,
            val_loss,
            test_accuracy,
            wall_seconds: started.elapsed().as_secs_f64(),
        },
        history,
        model: best_model,
        test_indices: fold.test.clone(),
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Builds the report from trained folds.
pub fn summarize(data: &PreparedData, config: &ExperimentConfig, outcomes: &[FoldOutcome]) -> TrainReport {
    let quantum = parameter_count(data.n_qubits, config.model.n_layers, Connectivity::Dense);
    let head = config.model.head_config(data.n_qubits, data.n_classes).parameter_count();
    let folds: Vec<FoldReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let tests: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
    let vals: Vec<f64> = folds.iter().map(|f| f.val_metric).collect();
    let (mean_test_accuracy, std_test_accuracy) = mean_std(&tests);
    TrainReport {
        dataset: data.name.clone(),
        n_qubits: data.n_qubits,
        n_layers: config.model.n_layers,
        quantum_parameters: quantum,
        head_parameters: head,
        parameter_count: quantum + head,
        mean_val_metric: mean_std(&vals).0,
        mean_test_accuracy,
        std_test_accuracy,
        folds,
        config: config.clone(),
    }
}

/// `run_cv_experiment`: stratified k-fold training (`kind = cv`) or just the
/// first fold's split (`kind = train`). Folds run in parallel.
pub fn run_cv_experiment(config: &ExperimentConfig, data: &PreparedData) -> Result<CvRun> {
    config.validate()?;
    if config.kind == ExperimentKind::EigenApprox {
        return Err(Error::Config("eigen-approx configs cannot run classification".into()));
    }
    let labels: Vec<usize> = data.samples.iter().map(|s| s.label).collect();
    let plan = stratified_kfold(&labels, config.training.folds, config.training.val_fraction, config.seed)?;
    let selected: Vec<(usize, &Fold)> = match config.kind {
        ExperimentKind::Train => vec![(0, &plan.folds[0])],
        _ => plan.folds.iter().enumerate().collect(),
    };
    let outcomes = selected
        .par_iter()
        .map(|&(i, fold)| {
            train_fold(data, fold, i, config).map_err(|e| Error::Fold {
                fold: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = summarize(data, config, &outcomes);
    Ok(CvRun { report, outcomes, plan })
}
