//! Tensor completion from partial observations and coarse aggregates.
//!
//! The central entry point is [`solver::mtc_solve`], which runs coupled CP-ALS
//! over a multiresolution hierarchy of a [`CompletionProblem`].

pub mod error;
pub mod gp;
pub mod kruskal;
pub mod multires;
pub mod problem;
pub mod solver;
pub mod synth;
pub mod tensor;

pub use error::{Coord, Error, Result};
pub use gp::{gp_forecast, GpParams};
pub use kruskal::{pof, pof_factors, reconstruct, rescale_columns, FactorSet};
pub use multires::{
    build_hierarchy, interpolate_solution, subsample_problem, Aspect, AspectSelection, ResolutionHierarchy, Selections,
};
pub use problem::{
    coarse_loss, interim_mttkrp, observed_loss, Aggregation, AggregationMatrix, CoarseTensor, CompletionProblem,
    InterimTensor, ModeKind, ModeSpec, Violation,
};
pub use solver::{mtc_solve, mtc_solve_tracked, SolveReport, SolverConfig};
pub use synth::{
    cpc_als, evaluate_prediction, generate_synthetic, oracle_cpd, sample_mask, CoarseView, PredictionTarget,
    SyntheticInstance,
};
pub use tensor::{CooObservations, DenseTensor3, Matrix, Mode};
