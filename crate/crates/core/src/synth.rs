//! Synthetic low-rank instances, observation sampling, reference baselines
//! and forecast evaluation.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape_err, Error, Result};
use crate::kruskal::{pof, reconstruct, FactorSet};
use crate::multires::derive_seed;
use crate::problem::{Aggregation, AggregationMatrix, CoarseTensor, CompletionProblem, ModeKind, ModeSpec};
use crate::solver::{random_init, solve_level, SolveReport, SolverConfig};
use crate::tensor::{mode_product, CooObservations, DenseTensor3, Matrix, Mode};

/// A rank-R tensor with two coarse views.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstance {
    pub truth: DenseTensor3,
    pub factors: [Matrix; 3],
    /// Aggregates mode 1.
    pub p1: AggregationMatrix,
    /// Aggregates mode 2.
    pub p2: AggregationMatrix,
    pub c1: DenseTensor3,
    pub c2: DenseTensor3,
    pub seed: u64,
}

/// How a coarse tensor enters a problem built from a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseView {
    Omit,
    Unknown,
    Known,
}

/// Assigns fine indices to `coarse` contiguous blocks of `⌈fine/coarse⌉`,
/// the last block taking the remainder. Falls back to balanced blocks when
/// that rule would leave a bucket empty.
pub fn contiguous_blocks(fine: usize, coarse: usize) -> Result<AggregationMatrix> {
    if coarse == 0 || coarse >= fine {
        return Err(Error::InvalidAggregation(format!(
            "coarse size {coarse} must be positive and below fine size {fine}"
        )));
    }
    let block = fine.div_ceil(coarse);
    let assignment = if (coarse - 1) * block < fine {
        (0..fine).map(|i| (i / block).min(coarse - 1)).collect()
    } else {
        (0..fine).map(|i| i * coarse / fine).collect()
    };
    AggregationMatrix::new(coarse, assignment)
}

/// Uniform `[0, 1)` factors with sorted columns in modes 2 and 3, and
/// contiguous-block aggregations of modes 1 and 2.
pub fn generate_synthetic(rank: usize, mode_size: usize, coarse_size: usize, seed: u64) -> Result<SyntheticInstance> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || Matrix::from_fn(mode_size, rank, |_, _| rng.gen::<f64>());
    let u = draw();
    let mut v = draw();
    let mut w = draw();
    for f in [&mut v, &mut w] {
        for r in 0..rank {
            let mut col: Vec<f64> = (0..mode_size).map(|i| f[(i, r)]).collect();
            col.sort_by(f64::total_cmp);
            for (i, x) in col.into_iter().enumerate() {
                f[(i, r)] = x;
            }
        }
    }
    let truth = reconstruct(&u, &v, &w)?;
    let p1 = contiguous_blocks(mode_size, coarse_size)?;
    let p2 = contiguous_blocks(mode_size, coarse_size)?;
    let c1 = mode_product(&truth, &p1.to_matrix(), Mode::One)?;
    let c2 = mode_product(&truth, &p2.to_matrix(), Mode::Two)?;
    Ok(SyntheticInstance {
        truth,
        factors: [u, v, w],
        p1,
        p2,
        c1,
        c2,
        seed,
    })
}

impl SyntheticInstance {
    pub fn shape(&self) -> [usize; 3] {
        self.truth.shape()
    }

    /// Mode 1 categorical, modes 2 and 3 continuous, coarse tensors attached
    /// per `c1` and `c2` with unit weight.
    pub fn problem(&self, obs: CooObservations, c1: CoarseView, c2: CoarseView) -> Result<CompletionProblem> {
        let [i, j, k] = self.shape();
        let agg = |view, p: &AggregationMatrix| match view {
            CoarseView::Omit => Aggregation::None,
            CoarseView::Unknown => Aggregation::Unknown {
                coarse_size: p.coarse_size(),
            },
            CoarseView::Known => Aggregation::Known(p.clone()),
        };
        let modes = [
            ModeSpec::aggregated(ModeKind::Categorical, i, agg(c1, &self.p1)),
            ModeSpec::aggregated(ModeKind::Continuous, j, agg(c2, &self.p2)),
            ModeSpec::single(ModeKind::Continuous, k),
        ];
        let mut coarse = Vec::new();
        if c1 != CoarseView::Omit {
            coarse.push(CoarseTensor {
                mode: Mode::One,
                tensor: self.c1.clone(),
                weight: 1.0,
            });
        }
        if c2 != CoarseView::Omit {
            coarse.push(CoarseTensor {
                mode: Mode::Two,
                tensor: self.c2.clone(),
                weight: 1.0,
            });
        }
        CompletionProblem::new(modes, obs, coarse)
    }

    /// The standard setup: aggregation of mode 1 unknown, of mode 2 known.
    pub fn standard_problem(&self, obs: CooObservations) -> Result<CompletionProblem> {
        self.problem(obs, CoarseView::Unknown, CoarseView::Known)
    }
}

/// `⌊fraction · |x|⌋` distinct coordinates drawn uniformly without
/// replacement, with values copied from `x`.
pub fn sample_mask(x: &DenseTensor3, fraction: f64, seed: u64) -> Result<CooObservations> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("fraction {fraction} outside (0, 1]")));
    }
    let n = x.len();
    let count = ((fraction * n as f64).floor() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [_, b, c] = x.shape();
    let entries = index::sample(&mut rng, n, count)
        .into_iter()
        .map(|lin| ([lin / (b * c), (lin / c) % b, lin % c], x.as_slice()[lin]))
        .collect();
    CooObservations::new(x.shape(), entries)
}

fn single_level(p: &CompletionProblem, cfg: &SolverConfig) -> Result<FactorSet> {
    cfg.validate()?;
    let init = random_init(p, cfg.rank, derive_seed(cfg.seed, 0, 99))?;
    let mut report = SolveReport::default();
    solve_level(p, init, cfg.fine_level_iters, cfg, &mut report)
}

/// ALS on the complete tensor, single level, `cfg.fine_level_iters`
/// iterations.
pub fn oracle_cpd(x: &DenseTensor3, rank: usize, cfg: &SolverConfig) -> Result<FactorSet> {
    let modes = x.shape().map(|n| ModeSpec::single(ModeKind::Continuous, n));
    let p = CompletionProblem::new(modes, CooObservations::from_dense(x), Vec::new())?;
    single_level(&p, &SolverConfig { rank, ..cfg.clone() })
}

/// EM-style CP completion from the observations alone, single level.
pub fn cpc_als(obs: &CooObservations, rank: usize, cfg: &SolverConfig) -> Result<FactorSet> {
    if obs.is_empty() {
        return Err(Error::EmptyObservations);
    }
    let modes = obs.shape().map(|n| ModeSpec::single(ModeKind::Continuous, n));
    let p = CompletionProblem::new(modes, obs.clone(), Vec::new())?;
    single_level(&p, &SolverConfig { rank, ..cfg.clone() })
}

/// Which quantity a forecast is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionTarget {
    /// Every future time step.
    Daily,
    /// Totals over the forecast horizon (mode 3 summed out).
    Cumulative,
}

/// PoF of `[[u, v, w_future]]` against `true_future`.
pub fn evaluate_prediction(
    true_future: &DenseTensor3,
    u: &Matrix,
    v: &Matrix,
    w_future: &Matrix,
    target: PredictionTarget,
) -> Result<f64> {
    let approx = reconstruct(u, v, w_future)?;
    if approx.shape() != true_future.shape() {
        return Err(shape_err("evaluate_prediction", true_future.shape(), approx.shape()));
    }
    match target {
        PredictionTarget::Daily => pof(true_future, &approx),
        PredictionTarget::Cumulative => pof(&true_future.sum_along(Mode::Three), &approx.sum_along(Mode::Three)),
    }
}
