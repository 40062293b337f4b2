//! Fixtures shared by the criterion benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenfill::multires::derive_seed;
use tenfill::solver::random_init;
use tenfill::{generate_synthetic, sample_mask, CompletionProblem, FactorSet, Matrix, SyntheticInstance};

/// The standard synthetic problem with a random start whose snapshot is set.
pub fn standard_case(
    size: usize,
    rank: usize,
    fraction: f64,
    seed: u64,
) -> (SyntheticInstance, CompletionProblem, FactorSet) {
    let inst = generate_synthetic(rank, size, (size / 10).max(2), seed).expect("valid synthetic sizes");
    let obs = sample_mask(&inst.truth, fraction, derive_seed(seed, 0, 200)).expect("valid fraction");
    let p = inst.standard_problem(obs).expect("consistent problem");
    let fs = random_init(&p, rank, seed).expect("valid rank").with_snapshot();
    (inst, p, fs)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// A symmetric, strictly diagonally dominant R×R Gram.
pub fn dominant_gram(r: usize, seed: u64) -> Matrix {
    let mut g = random_matrix(r, r, seed);
    for i in 0..r {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    for i in 0..r {
        g[(i, i)] = (0..r).filter(|&j| j != i).map(|j| g[(i, j)].abs()).sum::<f64>() + 1.0;
    }
    g
}
