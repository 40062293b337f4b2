use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kruskal::{pof_factors, rescale_columns, FactorSet};
use crate::multires::{build_hierarchy_limited, derive_seed, interpolate_solution, Aspect};
use crate::problem::{coarse_loss, observed_loss, Aggregation, CompletionProblem, InterimTensor};
use crate::solver::linear::{cholesky_solve, jacobi_solve};
use crate::solver::normal::{assemble_tied_with, assemble_with};
use crate::solver::{IterationRecord, SolveReport, SolverConfig};
use crate::tensor::{DenseTensor3, Matrix, Mode};

/// Linear solver used for every block of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStage {
    Jacobi,
    Cholesky,
}

/// `e^(−i/τ)`.
pub fn lambda_at(i: usize, cfg: &SolverConfig) -> f64 {
    (-(i as f64) / cfg.lambda_decay).exp()
}

/// Block order of one iteration: unaggregated fine factors first, then each
/// aggregated mode. An unknown aggregation updates its coarse factor before
/// the fine one; a known aggregation updates the fine factor and then
/// derives the coarse one from it.
pub fn update_order(p: &CompletionProblem) -> Vec<Aspect> {
    let mut order: Vec<Aspect> = Mode::ALL
        .into_iter()
        .filter(|&m| p.mode(m).aggregation == Aggregation::None)
        .map(Aspect::Fine)
        .collect();
    for mode in Mode::ALL {
        match p.mode(mode).aggregation {
            Aggregation::None => {}
            Aggregation::Known(_) => order.extend([Aspect::Fine(mode), Aspect::Coarse(mode)]),
            Aggregation::Unknown { .. } => order.extend([Aspect::Coarse(mode), Aspect::Fine(mode)]),
        }
    }
    order
}

/// Updates one block in place against a fixed interim tensor.
pub fn update_block(
    p: &CompletionProblem,
    fs: &mut FactorSet,
    block: Aspect,
    lambda: f64,
    stage: SolveStage,
    interim: &InterimTensor<'_>,
    cfg: &SolverConfig,
) -> Result<()> {
    if let Aspect::Coarse(mode) = block {
        if let Some(agg) = p.mode(mode).aggregation.known() {
            fs.coarse[mode.index()] = Some(agg.apply(fs.factor(mode))?);
            return Ok(());
        }
    }
    if let (Aspect::Fine(mode), SolveStage::Cholesky) = (block, stage) {
        if p.mode(mode).aggregation.known().is_some() && lambda != 0.0 {
            let tied = assemble_tied_with(p, fs, mode, lambda, interim)?;
            fs.fine[mode.index()] = tied.solve(cfg.diag_epsilon)?;
            return Ok(());
        }
    }
    let ne = assemble_with(p, fs, block, lambda, Some(interim))?;
    let slot: &mut Matrix = match block {
        Aspect::Fine(mode) => &mut fs.fine[mode.index()],
        Aspect::Coarse(mode) => fs.coarse[mode.index()]
            .as_mut()
            .ok_or(Error::MissingCoarse(mode.number()))?,
    };
    *slot = match stage {
        SolveStage::Jacobi => jacobi_solve(&ne.gram, &ne.rhs, slot, cfg)?,
        SolveStage::Cholesky => cholesky_solve(&ne.gram, &ne.rhs, cfg.diag_epsilon)?,
    };
    Ok(())
}

/// One outer iteration: every block in [`update_order`] against the interim
/// tensor of `fs.snapshot`, then column rescaling and a snapshot refresh.
pub fn als_iteration(
    p: &CompletionProblem,
    fs: &FactorSet,
    lambda: f64,
    stage: SolveStage,
    cfg: &SolverConfig,
) -> Result<FactorSet> {
    let snap = fs.snapshot.clone().ok_or(Error::MissingSnapshot)?;
    let interim = InterimTensor::new(p.observations(), &snap)?;
    let mut next = fs.clone();
    for block in update_order(p) {
        update_block(p, &mut next, block, lambda, stage, &interim, cfg)?;
    }
    let mut next = rescale_columns(&next)?;
    // Rescaling shares multipliers, which keeps Q = P·V only up to rounding.
    for mode in Mode::ALL {
        if let Some(agg) = p.mode(mode).aggregation.known() {
            next.coarse[mode.index()] = Some(agg.apply(next.factor(mode))?);
        }
    }
    Ok(next.with_snapshot())
}

/// How one level is run inside [`mtc_solve_tracked`].
#[derive(Debug, Clone, Copy)]
pub struct LevelPlan<'a> {
    pub level: usize,
    /// Decay λ with the iteration index; otherwise hold it at 1.
    pub decay_lambda: bool,
    pub truth: Option<&'a DenseTensor3>,
}

/// Runs up to `iters` iterations with the λ schedule, stopping early once
/// the relative change of `observed_loss + λ·coarse_loss` drops below the
/// tolerance.
pub fn solve_level(
    p: &CompletionProblem,
    init: FactorSet,
    iters: usize,
    cfg: &SolverConfig,
    report: &mut SolveReport,
) -> Result<FactorSet> {
    let plan = LevelPlan {
        level: 0,
        decay_lambda: true,
        truth: None,
    };
    solve_level_with(p, init, iters, cfg, report, plan)
}

pub fn solve_level_with(
    p: &CompletionProblem,
    init: FactorSet,
    iters: usize,
    cfg: &SolverConfig,
    report: &mut SolveReport,
    plan: LevelPlan<'_>,
) -> Result<FactorSet> {
    p.check_factors(&init)?;
    let mut fs = init;
    if fs.snapshot.is_none() {
        fs = fs.with_snapshot();
    }
    let mut previous: Option<f64> = None;
    for i in 0..iters {
        let start = cfg.record_timing.then(Instant::now);
        let lambda = if plan.decay_lambda { lambda_at(i, cfg) } else { 1.0 };
        let stage = if i < cfg.stage1_iters {
            SolveStage::Jacobi
        } else {
            SolveStage::Cholesky
        };
        fs = als_iteration(p, &fs, lambda, stage, cfg)?;
        if !fs.is_finite() {
            return Err(Error::Diverged {
                level: plan.level,
                iteration: i + 1,
            });
        }
        let obs = observed_loss(p, &fs)?;
        let coarse = coarse_loss(p, &fs)?;
        let pof = plan.truth.map(|t| pof_factors(t, &fs)).transpose()?;
        report.push(IterationRecord {
            level: plan.level,
            iteration: i + 1,
            lambda,
            observed_loss: obs,
            coarse_loss: coarse,
            pof,
            seconds: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        });
        let objective = obs + lambda * coarse;
        if let Some(prev) = previous {
            let change = (prev - objective).abs();
            if change == 0.0 || change / prev.abs().max(f64::MIN_POSITIVE) < cfg.tolerance {
                break;
            }
        }
        previous = Some(objective);
    }
    Ok(fs)
}

/// Factors i.i.d. uniform on `[-1, 1]`; coarse factors of known
/// aggregations are derived from their fine factor.
pub fn random_init(p: &CompletionProblem, rank: usize, seed: u64) -> Result<FactorSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize| Matrix::from_fn(rows, rank, |_, _| rng.gen_range(-1.0..=1.0));
    let [i, j, k] = p.shape();
    let (u, v, w) = (draw(i), draw(j), draw(k));
    let mut fs = FactorSet::new(u, v, w)?;
    for mode in Mode::ALL {
        match &p.mode(mode).aggregation {
            Aggregation::None => {}
            Aggregation::Known(agg) => {
                let q = agg.apply(fs.factor(mode))?;
                fs = fs.with_coarse(mode, q)?;
            }
            Aggregation::Unknown { coarse_size } => {
                let q = draw(*coarse_size);
                fs = fs.with_coarse(mode, q)?;
            }
        }
    }
    Ok(fs)
}

/// Multiresolution solve of `p` from a random start.
pub fn mtc_solve(p: &CompletionProblem, cfg: &SolverConfig) -> Result<(FactorSet, SolveReport)> {
    mtc_solve_tracked(p, cfg, None)
}

/// [`mtc_solve`], recording PoF against `truth` at every level; coarser
/// levels compare against `truth` restricted to their selections.
pub fn mtc_solve_tracked(
    p: &CompletionProblem,
    cfg: &SolverConfig,
    truth: Option<&DenseTensor3>,
) -> Result<(FactorSet, SolveReport)> {
    cfg.validate()?;
    p.validate().map_err(Error::InvalidProblem)?;
    let hierarchy = build_hierarchy_limited(p, cfg.min_mode_size, cfg.max_depth)?;
    let depth = hierarchy.depth();
    // Ground truth restricted the same way as each level's problem.
    let mut truths: Vec<Option<DenseTensor3>> = vec![None; depth + 1];
    truths[depth] = truth.cloned();
    for l in (0..depth).rev() {
        let sel = hierarchy.levels[l]
            .selections
            .as_ref()
            .expect("levels below the finest record selections");
        truths[l] = match &truths[l + 1] {
            Some(t) => Some(t.select([sel.fine[0].selected(), sel.fine[1].selected(), sel.fine[2].selected()])?),
            None => None,
        };
    }
    let mut report = SolveReport::default();
    let mut fs = random_init(hierarchy.coarsest(), cfg.rank, derive_seed(cfg.seed, 0, 99))?;
    for (l, level) in hierarchy.levels.iter().enumerate() {
        if l > 0 {
            let sel = hierarchy.levels[l - 1]
                .selections
                .as_ref()
                .expect("every level below the finest records its selections");
            fs = interpolate_solution(&level.problem, sel, &fs, derive_seed(cfg.seed, l, 100))?;
        }
        let finest = l == depth;
        let plan = LevelPlan {
            level: l,
            decay_lambda: finest,
            truth: truths[l].as_ref(),
        };
        let iters = if finest {
            cfg.fine_level_iters
        } else {
            cfg.coarse_level_iters
        };
        fs = solve_level_with(&level.problem, fs, iters, cfg, &mut report, plan)?;
    }
    Ok((fs, report))
}
