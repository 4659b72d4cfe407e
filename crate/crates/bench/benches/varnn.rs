// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use varnn_bench::{model, prepared};
use varnn_core::model::rollout;
use varnn_core::trainer::{backward, fit};
use varnn_core::{TrainConfig, Variant};

fn forward(c: &mut Criterion) {
    let data = prepared(2000, 1);
    let window = &data.windows.test[0];
    let mut group = c.benchmark_group("rollout");
    for variant in Variant::ALL {
        for k in [32, 128] {
            let m = model(variant, 4, 4, k);
            group.bench_with_input(BenchmarkId::new(variant.label(), k), &m, |b, m| {
                b.iter(|| rollout(&m.spec, &m.params, black_box(window)).unwrap())
            });
        }
    }
    group.finish();
}

fn gradient(c: &mut Criterion) {
    let data = prepared(2000, 1);
    let window = &data.windows.test[0];
    let mut group = c.benchmark_group("backward");
    for variant in Variant::ALL {
        let m = model(variant, 4, 4, 128);
        let trace = rollout(&m.spec, &m.params, window).unwrap();
        group.bench_function(variant.label(), |b| {
            b.iter(|| backward(&m.spec, &m.params, black_box(window), &trace).unwrap())
        });
    }
    group.finish();
}

fn epoch(c: &mut Criterion) {
    let data = prepared(2000, 1);
    let cfg = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let mut group = c.benchmark_group("epoch");
    group.sample_size(10);
    for variant in [Variant::Rm, Variant::Arm] {
        let m = model(variant, 4, 4, 128);
        group.bench_function(variant.label(), |b| {
            b.iter(|| fit(m.clone(), &data.windows.train, &data.windows.val, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward, gradient, epoch);
criterion_main!(benches);
