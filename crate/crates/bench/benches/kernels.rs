use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tenfill::solver::{als_iteration, cholesky_solve, jacobi_sweeps, SolveStage};
use tenfill::tensor::{mttkrp_dense, mttkrp_sparse};
use tenfill::{InterimTensor, Mode, SolverConfig};
use tenfill_bench::{dominant_gram, random_matrix, standard_case};

fn mttkrp(c: &mut Criterion) {
    let mut group = c.benchmark_group("mttkrp");
    for size in [32usize, 64] {
        let (inst, p, fs) = standard_case(size, 10, 0.03, 1);
        let obs = p.observations();
        group.bench_with_input(BenchmarkId::new("dense", size), &size, |b, _| {
            b.iter(|| mttkrp_dense(black_box(&inst.truth), fs.v(), fs.w(), Mode::One).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sparse_3pct", size), &size, |b, _| {
            b.iter(|| mttkrp_sparse(black_box(obs), fs.v(), fs.w(), Mode::One).unwrap())
        });
        let snap = fs.snapshot.as_ref().unwrap();
        let interim = InterimTensor::new(obs, snap).unwrap();
        group.bench_with_input(BenchmarkId::new("interim_3pct", size), &size, |b, _| {
            b.iter(|| interim.mttkrp(Mode::One, black_box(fs.v()), fs.w()).unwrap())
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("als_iteration");
    group.sample_size(10);
    let cfg = SolverConfig::with_rank(10);
    let (_, p, fs) = standard_case(64, 10, 0.03, 2);
    for stage in [SolveStage::Jacobi, SolveStage::Cholesky] {
        group.bench_function(format!("{stage:?}"), |b| {
            b.iter(|| als_iteration(black_box(&p), &fs, 0.5, stage, &cfg).unwrap())
        });
    }
    group.finish();
}

fn linear(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_solve");
    for r in [10usize, 20] {
        let gram = dominant_gram(r, 3);
        let rhs = random_matrix(125, r, 4);
        let x0 = random_matrix(125, r, 5);
        group.bench_with_input(BenchmarkId::new("cholesky", r), &r, |b, _| {
            b.iter(|| cholesky_solve(black_box(&gram), &rhs, 1e-5).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("jacobi_5", r), &r, |b, _| {
            b.iter(|| jacobi_sweeps(black_box(&gram), &rhs, &x0, 5, 0.7, 1e-5).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, mttkrp, iteration, linear);
criterion_main!(benches);
