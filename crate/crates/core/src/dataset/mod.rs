//! Dataset input: TUDataset parsing, sample preparation and fold planning.

mod folds;
mod prepare;
mod toy;
mod tudataset;

pub use folds::{stratified_kfold, Fold, FoldPlan};
pub use prepare::{
    cache_path, node_qubits, prepare_samples, prepare_samples_cached, required_qubits, shared_random_phases,
    PrepareParams, PreparedSample, DEFAULT_NOISE_RANGE,
};
pub use toy::toy_dataset;
pub use tudataset::{parse_tudataset, parse_tudataset_with, write_tudataset, DatasetBundle, ParseOptions};
