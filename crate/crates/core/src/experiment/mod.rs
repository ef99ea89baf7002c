//! Experiment orchestration: the eigenspace study, cross-validated
//! classification, reports and checkpoints.

mod config;
mod eigen;
mod model;
mod report;
mod train;

pub use config::{
    preset, DatasetSpec, EigenSpec, ExperimentConfig, ExperimentKind, ModelSpec, DatasetPreset, TrainingSpec,
    DATASET_PRESETS,
};
pub use eigen::{run_eigen_experiment, study_graph, EigenCell, EigenReport, STALL_FLOOR, STALL_RATIO};
pub use model::{argmax, BatchCache, HybridModel};
pub use report::{
    checkpoint_path, emit_report, eigen_summary_csv, eigen_trace_csv, epochs_csv, folds_csv, load_report, load_saved_report,
    render_report, render_saved, write_cv_run, write_eigen_run, Checkpoint, ReportFormat, SavedReport,
};
pub use train::{
    load_dataset, prepare_data, run_cv_experiment, summarize, train_fold, CvRun, EpochRecord, FoldOutcome,
    FoldReport, PreparedData, TrainReport,
};
