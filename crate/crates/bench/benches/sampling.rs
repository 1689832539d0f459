use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ouhaar::{first_passage_bracket, Ensemble, PathExpansion};
use ouhaar_bench::{off_grid_points, unit_params};
use rayon::prelude::*;

fn grid_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid_path");
    let e = PathExpansion::new(unit_params(1.0), 42, 20).unwrap();
    for level in [6u32, 10, 14] {
        group.throughput(Throughput::Elements((1u64 << level) + 1));
        group.bench_with_input(BenchmarkId::new("top_down", level), &level, |b, &level| {
            b.iter(|| e.grid_path(black_box(level)).unwrap())
        });
        if level <= 10 {
            group.bench_with_input(BenchmarkId::new("basis_sum", level), &level, |b, &level| {
                b.iter(|| e.grid_path_naive(black_box(level)).unwrap())
            });
        }
    }
    group.finish();
}

fn pointwise(c: &mut Criterion) {
    let e = PathExpansion::new(unit_params(1.0), 42, 24).unwrap();
    let points = off_grid_points(64);
    c.bench_function("evaluate/off_grid_level_24", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|&t| e.evaluate(black_box(t)).unwrap())
                .sum::<f64>()
        })
    });
}

fn ensembles(c: &mut Criterion) {
    let ensemble = Ensemble::new(unit_params(1.0), 6, 10_000, 42).unwrap();
    let mut group = c.benchmark_group("ensemble_level_6");
    group.sample_size(10);
    group.throughput(Throughput::Elements(ensemble.len()));
    group.bench_function("sequential", |b| {
        b.iter(|| ensemble.iter().map(|p| p.values()[64]).sum::<f64>())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| ensemble.par_iter().map(|p| p.values()[64]).sum::<f64>())
    });
    group.finish();
}

fn first_passage(c: &mut Criterion) {
    let e = PathExpansion::new(unit_params(1.0), 42, 16).unwrap();
    let mut group = c.benchmark_group("first_passage_level_12");
    for floor in [0.0, 1e-3] {
        group.bench_with_input(BenchmarkId::from_parameter(floor), &floor, |b, &floor| {
            b.iter(|| first_passage_bracket(&e, black_box(0.8), 12, floor).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, grid_paths, pointwise, ensembles, first_passage);
criterion_main!(benches);
