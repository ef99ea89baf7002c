use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qsf_core::dataset::{toy_dataset, PreparedSample};
use qsf_core::experiment::{prepare_data, DatasetSpec, ExperimentConfig, ExperimentKind, HybridModel};
use qsf_core::head::{head_backward, HeadConfig, HeadModel};
use qsf_core::{rng, RealMatrix};

fn head_step(c: &mut Criterion) {
    let model = HeadModel::new(HeadConfig::new(8, 32, 16, 2), &mut rng::seeded(1)).unwrap();
    let x = RealMatrix::from_vec(32, 8, (0..256).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap();
    let labels: Vec<usize> = (0..32).map(|i| i % 2).collect();
    c.bench_function("head_backward_b32", |b| {
        b.iter(|| head_backward(&model, black_box(&x), &labels, &mut rng::seeded(2)).unwrap())
    });
}

fn hybrid_step(c: &mut Criterion) {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Cv);
    cfg.dataset = Some(DatasetSpec {
        name: "TOY".into(),
        path: None,
        minmax_attributes: false,
    });
    let bundle = toy_dataset(32, 1).unwrap();
    let data = prepare_data(&cfg, &bundle, None).unwrap();
    let model = HybridModel::new(data.n_qubits, &cfg.model, 2, &data.shared_phases, &mut rng::seeded(3)).unwrap();
    let batch: Vec<&PreparedSample> = data.samples.iter().collect();
    c.bench_function("hybrid_loss_and_gradient_b32", |b| {
        b.iter(|| model.loss_and_gradient(black_box(&batch), &mut rng::seeded(4)).unwrap())
    });
}

criterion_group!(benches, head_step, hybrid_step);
criterion_main!(benches);
