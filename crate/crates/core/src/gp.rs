//! Gaussian-process extrapolation of a time factor, column by column.

use crate::error::{Error, Result};
use crate::solver::Cholesky;
use crate::tensor::Matrix;

/// Kernel hyperparameters of [`gp_forecast`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpParams {
    pub length_scale: f64,
    /// White-noise variance added to the diagonal.
    pub noise: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        GpParams {
            length_scale: 10.0,
            noise: 1e-4,
        }
    }
}

fn rbf(s: f64, t: f64, length_scale: f64) -> f64 {
    let d = s - t;
    (-(d * d) / (2.0 * length_scale * length_scale)).exp()
}

/// Posterior mean at `t = T+1 ..= T+horizon` of a GP fit to each column of
/// `w` at `t = 1 ..= T`, under an RBF plus white-noise kernel.
///
/// Each column is centred on its mean before fitting, so a constant column
/// extrapolates to itself.
pub fn gp_forecast(w: &Matrix, horizon: usize, params: GpParams) -> Result<Matrix> {
    let t_len = w.rows();
    if t_len < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 time steps, got {t_len}"
        )));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if !(params.length_scale > 0.0) || !(params.noise >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "length_scale {} and noise {} must be positive",
            params.length_scale, params.noise
        )));
    }
    let l = params.length_scale;
    let k = Matrix::from_fn(t_len, t_len, |a, b| {
        rbf(a as f64, b as f64, l) + if a == b { params.noise } else { 0.0 }
    });
    let chol = Cholesky::new(&k, 0.0)?;

    // Centred targets, one column per row so `solve_rows` handles all at once.
    let means: Vec<f64> = (0..w.cols())
        .map(|r| (0..t_len).map(|t| w[(t, r)]).sum::<f64>() / t_len as f64)
        .collect();
    let centred = Matrix::from_fn(w.cols(), t_len, |r, t| w[(t, r)] - means[r]);
    let alpha = chol.solve_rows(&centred)?;

    let cross = Matrix::from_fn(horizon, t_len, |h, t| rbf((t_len + h) as f64, t as f64, l));
    let mut out = cross.matmul(&alpha.transpose())?;
    for h in 0..horizon {
        for (x, m) in out.row_mut(h).iter_mut().zip(&means) {
            *x += m;
        }
    }
    Ok(out)
}
