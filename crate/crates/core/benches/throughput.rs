use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairpain::cohort::{synthesize_cohort, Attribute, BiasStrengths, SynthConfig};
use fairpain::exec::Exec;
use fairpain::fairness::{report, GroupedOutcomes};
use fairpain::features::{build_feature_matrix_with, EncodingPlan, FeatureSelection};
use fairpain::mitigation::dir_repair_with;
use fairpain::net::{forward, Arch, Mode, NetworkParameters};
use fairpain::Matrix;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn forward_batch(c: &mut Criterion) {
    let params = NetworkParameters::init(Arch::standard(1440), 1).unwrap();
    let batch = 32;
    let x: Vec<f64> = (0..batch * 1440).map(|i| ((i * 7919) % 1000) as f64 / 1000.0).collect();
    let mut g = c.benchmark_group("forward_batch32_raw1440");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| forward(&params, black_box(&x), batch, Mode::Eval, exec).unwrap())
        });
    }
    g.finish();
}

fn feature_matrix(c: &mut Criterion) {
    let cohort = synthesize_cohort(&SynthConfig::new(30, BiasStrengths::single(Attribute::Gender, 0.3), 2)).unwrap();
    let plan = EncodingPlan::features(FeatureSelection::default());
    let mut g = c.benchmark_group("feature_matrix_30_participants");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_feature_matrix_with(black_box(&cohort), &plan, exec).unwrap())
        });
    }
    g.finish();
}

fn repair(c: &mut Criterion) {
    let (rows, cols) = (2000, 64);
    let data: Vec<f64> = (0..rows * cols).map(|i| ((i * 2654435761usize) % 10007) as f64).collect();
    let m = Matrix::from_vec(rows, cols, data).unwrap();
    let group: Vec<u8> = (0..rows).map(|i| (i % 3 == 0) as u8).collect();
    let mut g = c.benchmark_group("dir_repair_2000x64");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dir_repair_with(black_box(&m), &group, 1.0, exec).unwrap())
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let n = 10_000;
    let p: Vec<u8> = (0..n).map(|i| ((i * 31) % 7 < 3) as u8).collect();
    let y: Vec<u8> = (0..n).map(|i| ((i * 17) % 5 < 2) as u8).collect();
    let g: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    c.bench_function("fairness_report_10k", |b| {
        b.iter(|| report(&GroupedOutcomes::new(black_box(&p), Some(&y), &g, None).unwrap()).unwrap())
    });
}

criterion_group!(benches, forward_batch, feature_matrix, repair, metrics);
criterion_main!(benches);
