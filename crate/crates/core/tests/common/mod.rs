#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tenfill::{
    reconstruct, Aggregation, AggregationMatrix, CoarseTensor, CompletionProblem, CooObservations, DenseTensor3,
    FactorSet, Matrix, Mode, ModeKind, ModeSpec,
};

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random buckets with every bucket non-empty.
pub fn random_aggregation(rng: &mut ChaCha8Rng, fine: usize, coarse: usize) -> AggregationMatrix {
    let mut assignment: Vec<usize> = (0..fine)
        .map(|i| if i < coarse { i } else { rng.gen_range(0..coarse) })
        .collect();
    for i in (1..fine).rev() {
        assignment.swap(i, rng.gen_range(0..=i));
    }
    AggregationMatrix::new(coarse, assignment).unwrap()
}

/// A small random instance: mode 1 aggregated with unknown P, mode 2 with
/// known P, observations drawn with probability `frac`.
pub struct Instance {
    pub truth: [Matrix; 3],
    pub x: DenseTensor3,
    pub p1: AggregationMatrix,
    pub p2: AggregationMatrix,
    pub problem: CompletionProblem,
}

pub fn instance(shape: [usize; 3], rank: usize, frac: f64, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = shape.map(|n| random_matrix(&mut rng, n, rank));
    let x = reconstruct(&f[0], &f[1], &f[2]).unwrap();
    let p1 = random_aggregation(&mut rng, shape[0], shape[0] / 2);
    let p2 = random_aggregation(&mut rng, shape[1], shape[1] / 2);
    let mut entries = Vec::new();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                if rng.gen::<f64>() < frac {
                    entries.push(([i, j, k], x[(i, j, k)]));
                }
            }
        }
    }
    let obs = CooObservations::new(shape, entries).unwrap();
    let c1 = tenfill::tensor::mode_product(&x, &p1.to_matrix(), Mode::One).unwrap();
    let c2 = tenfill::tensor::mode_product(&x, &p2.to_matrix(), Mode::Two).unwrap();
    let modes = [
        ModeSpec::aggregated(
            ModeKind::Categorical,
            shape[0],
            Aggregation::Unknown {
                coarse_size: p1.coarse_size(),
            },
        ),
        ModeSpec::aggregated(ModeKind::Continuous, shape[1], Aggregation::Known(p2.clone())),
        ModeSpec::single(ModeKind::Continuous, shape[2]),
    ];
    let problem = CompletionProblem::new(
        modes,
        obs,
        vec![
            CoarseTensor {
                mode: Mode::One,
                tensor: c1,
                weight: 1.0,
            },
            CoarseTensor {
                mode: Mode::Two,
                tensor: c2,
                weight: 0.5,
            },
        ],
    )
    .unwrap();
    Instance {
        truth: f,
        x,
        p1,
        p2,
        problem,
    }
}

/// Random factors for `inst`, with Q2 = P2·V and an unrelated snapshot.
pub fn random_factors(inst: &Instance, rank: usize, seed: u64) -> FactorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [a, b, c] = inst.problem.shape();
    let fine = [a, b, c].map(|n| random_matrix(&mut rng, n, rank));
    let snap = [a, b, c].map(|n| random_matrix(&mut rng, n, rank));
    let q1 = random_matrix(&mut rng, inst.p1.coarse_size(), rank);
    let q2 = inst.p2.apply(&fine[1]).unwrap();
    let [u, v, w] = fine;
    let mut fs = FactorSet::new(u, v, w)
        .unwrap()
        .with_coarse(Mode::One, q1)
        .unwrap()
        .with_coarse(Mode::Two, q2)
        .unwrap();
    fs.snapshot = Some(snap);
    fs
}

/// The interim tensor, materialized: observed entries kept, the rest taken
/// from the snapshot's reconstruction.
pub fn dense_interim(obs: &CooObservations, snapshot: &[Matrix; 3]) -> DenseTensor3 {
    let mut t = reconstruct(&snapshot[0], &snapshot[1], &snapshot[2]).unwrap();
    let [_, b, c] = t.shape();
    for (co, x) in obs.iter() {
        t.as_mut_slice()[(co[0] * b + co[1]) * c + co[2]] = x;
    }
    t
}

fn sq_dist(a: &DenseTensor3, b: &DenseTensor3) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum()
}

/// Surrogate objective against the interim tensor of the snapshot, with
/// known coarse factors taken as `P·fine` and triple loops throughout.
pub fn surrogate(p: &CompletionProblem, fs: &FactorSet, lambda: f64) -> f64 {
    let snap = fs.snapshot.as_ref().unwrap();
    let interim = dense_interim(p.observations(), snap);
    let mut total = sq_dist(&interim, &reconstruct(fs.u(), fs.v(), fs.w()).unwrap());
    for c in p.coarse() {
        let q = match p.mode(c.mode).aggregation.known() {
            Some(agg) => agg.apply(fs.factor(c.mode)).unwrap(),
            None => fs.coarse_factor(c.mode).unwrap().clone(),
        };
        let mut f = fs.fine.clone();
        f[c.mode.index()] = q;
        total += lambda * c.weight * sq_dist(&c.tensor, &reconstruct(&f[0], &f[1], &f[2]).unwrap());
    }
    total
}
