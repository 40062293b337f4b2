use crate::error::{Error, Result};

/// Solver knobs. Every count may be zero except `rank` and `jacobi_rounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub rank: usize,
    /// Iterations at every level except the finest.
    pub coarse_level_iters: usize,
    pub fine_level_iters: usize,
    /// Leading iterations of each level solved by weighted Jacobi.
    pub stage1_iters: usize,
    pub jacobi_rounds: usize,
    pub jacobi_weight: f64,
    /// Added to the Gram diagonal before Jacobi inversion and as the
    /// Cholesky ridge.
    pub diag_epsilon: f64,
    /// τ in λ = e^(−i/τ).
    pub lambda_decay: f64,
    /// Stop a level once the relative objective change falls below this.
    pub tolerance: f64,
    /// Smallest fine mode size a subsampled level may have. At 16 the
    /// coarsest level of a sparsely observed problem carries too few
    /// observations to seed the finer ones.
    pub min_mode_size: usize,
    /// Cap on subsampling steps; `Some(0)` disables the hierarchy.
    pub max_depth: Option<usize>,
    pub seed: u64,
    /// Record wall time per iteration. Off by default so reports are
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rank: 10,
            coarse_level_iters: 20,
            fine_level_iters: 200,
            stage1_iters: 5,
            jacobi_rounds: 5,
            jacobi_weight: 0.7,
            diag_epsilon: 1e-5,
            lambda_decay: 20.0,
            tolerance: 1e-6,
            min_mode_size: 32,
            max_depth: None,
            seed: 0,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn with_rank(rank: usize) -> Self {
        SolverConfig {
            rank,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if self.jacobi_rounds == 0 {
            return bad("jacobi_rounds must be positive".into());
        }
        if !(self.jacobi_weight > 0.0 && self.jacobi_weight <= 1.0) {
            return bad(format!("jacobi_weight {} outside (0, 1]", self.jacobi_weight));
        }
        if !(self.diag_epsilon > 0.0 && self.diag_epsilon.is_finite()) {
            return bad(format!("diag_epsilon {} must be positive", self.diag_epsilon));
        }
        if !(self.lambda_decay > 0.0) {
            return bad(format!("lambda_decay {} must be positive", self.lambda_decay));
        }
        if !(self.tolerance >= 0.0) {
            return bad(format!("tolerance {} must be nonnegative", self.tolerance));
        }
        if self.min_mode_size < 2 {
            return bad(format!("min_mode_size {} below 2", self.min_mode_size));
        }
        Ok(())
    }
}
