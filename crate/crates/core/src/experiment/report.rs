//! Run directories, CSV/JSON reports and checkpoints.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::eigen::EigenReport;
use super::model::HybridModel;
use super::train::{CvRun, FoldOutcome, TrainReport};
use crate::dataset::PreparedSample;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// `fold,best_epoch,val_metric,test_accuracy`, one row per fold and a final
/// `summary` row holding the means.
pub fn folds_csv(report: &TrainReport) -> String {
    let mut s = String::from("fold,best_epoch,val_metric,test_accuracy\n");
    for f in &report.folds {
        let _ = writeln!(s, "{},{},{},{}", f.fold, f.best_epoch, f.val_metric, f.test_accuracy);
    }
    let _ = writeln!(s, "summary,,{},{}", report.mean_val_metric, report.mean_test_accuracy);
    s
}

pub fn epochs_csv(outcomes: &[FoldOutcome]) -> String {
    let mut s = String::from("fold,epoch,train_loss,val_loss,val_accuracy,learning_rate\n");
    for o in outcomes {
        for e in &o.history {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                o.report.fold, e.epoch, e.train_loss, e.val_loss, e.val_accuracy, e.learning_rate
            );
        }
    }
    s
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// A `summary.json` from either kind of run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SavedReport {
    Cv(TrainReport),
    Eigen(EigenReport),
}

pub fn emit_report(report: &TrainReport, format: ReportFormat, path: &Path) -> Result<()> {
    write(path, &render_report(report, format))
}

pub fn render_report(report: &TrainReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => folds_csv(report),
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes"),
    }
}

/// Eigen reports render as the per-cell summary table in CSV.
pub fn render_saved(report: &SavedReport, format: ReportFormat) -> String {
    match (report, format) {
        (SavedReport::Cv(r), f) => render_report(r, f),
        (SavedReport::Eigen(r), ReportFormat::Csv) => eigen_summary_csv(r),
        (SavedReport::Eigen(r), ReportFormat::Json) => serde_json::to_string_pretty(r).expect("report serializes"),
    }
}

pub fn load_report(path: &Path) -> Result<TrainReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_saved_report(path: &Path) -> Result<SavedReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    // Dispatch explicitly so a malformed report keeps a precise error.
    if value.get("cells").is_some() {
        Ok(SavedReport::Eigen(serde_json::from_value(value)?))
    } else {
        Ok(SavedReport::Cv(serde_json::from_value(value)?))
    }
}

/// The selected model of one fold with what is needed to re-score it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub fold: usize,
    pub best_epoch: usize,
    pub test_indices: Vec<usize>,
    pub test_accuracy: f64,
    pub model: HybridModel,
}

impl Checkpoint {
    pub fn from_outcome(o: &FoldOutcome) -> Self {
        Self {
            fold: o.report.fold,
            best_epoch: o.report.best_epoch,
            test_indices: o.test_indices.clone(),
            test_accuracy: o.report.test_accuracy,
            model: o.model.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Test accuracy of the stored model on its recorded test indices.
    pub fn rescore(&self, samples: &[PreparedSample]) -> Result<f64> {
        let test = self
            .test_indices
            .iter()
            .map(|&i| {
                samples
                    .get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("checkpoint test index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.model.evaluate(&test)?.1)
    }
}

pub fn checkpoint_path(dir: &Path, fold: usize) -> PathBuf {
    dir.join("checkpoints").join(format!("fold_{fold:02}.json"))
}

/// Writes `config.json`, `folds.csv`, `epochs.csv`, `summary.json` and one
/// checkpoint per fold.
pub fn write_cv_run(run: &CvRun, dir: &Path) -> Result<()> {
    write(&dir.join("config.json"), &run.report.config.to_json())?;
    write(&dir.join("folds.csv"), &folds_csv(&run.report))?;
    write(&dir.join("epochs.csv"), &epochs_csv(&run.outcomes))?;
    emit_report(&run.report, ReportFormat::Json, &dir.join("summary.json"))?;
    for o in &run.outcomes {
        let ckpt = Checkpoint::from_outcome(o);
        write(&checkpoint_path(dir, o.report.fold), &serde_json::to_string(&ckpt)?)?;
    }
    Ok(())
}

/// `graph_id,iteration,loss` for every trace; ids are `q<qubits>-l<layers>-g<graph>`
/// and `q<qubits>-l<layers>-mean` for the cell mean.
pub fn eigen_trace_csv(report: &EigenReport) -> String {
    let mut s = String::from("graph_id,iteration,loss\n");
    for c in &report.cells {
        let prefix = format!("q{}-l{}", c.n_qubits, c.n_layers);
        for (g, t) in c.traces.iter().enumerate() {
            for (i, v) in t.0.iter().enumerate() {
                let _ = writeln!(s, "{prefix}-g{g},{i},{v:?}");
            }
        }
        for (i, v) in c.mean_trace.iter().enumerate() {
            let _ = writeln!(s, "{prefix}-mean,{i},{v:?}");
        }
    }
    s
}

pub fn eigen_summary_csv(report: &EigenReport) -> String {
    let mut s = String::from("n_qubits,n_layers,mean_final_loss,min_final_loss,max_final_loss,stalled\n");
    for c in &report.cells {
        let finals: Vec<f64> = c.traces.iter().filter_map(|t| t.last()).collect();
        let min = finals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            "{},{},{:?},{:?},{:?},{}",
            c.n_qubits,
            c.n_layers,
            c.mean_final_loss,
            min,
            max,
            c.stalled_graphs.len()
        );
    }
    s
}

/// Writes `config.json`, `trace.csv`, `summary.csv` and `summary.json`.
pub fn write_eigen_run(report: &EigenReport, dir: &Path) -> Result<()> {
    write(&dir.join("config.json"), &report.config.to_json())?;
    write(&dir.join("trace.csv"), &eigen_trace_csv(report))?;
    write(&dir.join("summary.csv"), &eigen_summary_csv(report))?;
    write(&dir.join("summary.json"), &serde_json::to_string_pretty(report)?)
}
