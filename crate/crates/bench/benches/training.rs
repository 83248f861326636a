//! One gradient step and one training epoch on lifted moons features.

use criterion::{criterion_group, criterion_main, Criterion};
use gmc::budgeting::{init_random, PlaneBudget};
use gmc::training::{fit_planes, gradients, Batch, UsageTracker};
use gmc::TrainConfig;
use gmc_bench::lifted_moons;
use std::hint::black_box;

fn training(c: &mut Criterion) {
    let train = lifted_moons(2400, 512, 0).unwrap();
    let val = lifted_moons(800, 512, 1).unwrap();
    let val_phi = train.pipeline.apply(val.data.features()).unwrap();
    let budget = PlaneBudget::uniform(2, 3).unwrap();
    let planes = init_random(train.phi.ncols(), &budget, 0).unwrap();
    let cfg = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };

    let rows: Vec<usize> = (0..cfg.batch_size).collect();
    c.bench_function("gradient_step_b256_d1024", |b| {
        let mut tracker = UsageTracker::new(&planes, cfg.usage_momentum);
        let batch = Batch::subset(train.phi.view(), train.data.labels(), &rows);
        b.iter(|| gradients(black_box(&batch), &planes, 6.0, &mut tracker, &cfg).unwrap())
    });

    let mut group = c.benchmark_group("epoch");
    group.sample_size(10);
    group.bench_function("moons_2400_d1024", |b| {
        b.iter(|| {
            fit_planes(train.phi.view(), train.data.labels(), val_phi.view(), val.data.labels(), planes.clone(), &cfg).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, training);
criterion_main!(benches);
