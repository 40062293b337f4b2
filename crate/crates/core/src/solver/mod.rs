//! Coupled ALS: joint normal equations, two-stage linear solves, the λ
//! schedule and the multiresolution driver.

mod als;
mod config;
mod linear;
mod normal;
mod report;

pub use als::{
    als_iteration, lambda_at, mtc_solve, mtc_solve_tracked, random_init, solve_level, solve_level_with, update_block,
    update_order, LevelPlan, SolveStage,
};
pub use config::SolverConfig;
pub use linear::{cholesky_solve, jacobi_solve, jacobi_spectral_radius, jacobi_sweeps, stable_jacobi_weight, Cholesky};
pub use normal::{assemble_normal_equation, assemble_tied_equation, NormalEquation, TiedNormalEquation};
pub use report::{IterationRecord, SolveReport};
