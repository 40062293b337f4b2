//! CP factor containers, Kruskal reconstruction, column rescaling and the
//! percentage-of-fitness metric.

use crate::error::{shape_err, Error, Result};
use crate::tensor::{frobenius_norm, DenseTensor3, Matrix, Mode};

/// The CP factors of one completion problem.
///
/// `fine[m]` is the factor of mode `m` at fine granularity (U, V, W).
/// `coarse[m]` is the auxiliary factor of the coarse aspect of mode `m`, present
/// only when a coarse tensor aggregates that mode (Q1 for mode 1, Q2 for mode 2).
/// `snapshot` holds the fine factors of the previous outer iteration, which
/// define the interim tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub fine: [Matrix; 3],
    pub coarse: [Option<Matrix>; 3],
    pub snapshot: Option<[Matrix; 3]>,
}

impl FactorSet {
    /// Fine factors only, snapshot set to the same factors.
    pub fn new(u: Matrix, v: Matrix, w: Matrix) -> Result<Self> {
        let fs = FactorSet {
            fine: [u, v, w],
            coarse: [None, None, None],
            snapshot: None,
        };
        fs.check_rank()?;
        Ok(fs.with_snapshot())
    }

    pub fn with_coarse(mut self, mode: Mode, q: Matrix) -> Result<Self> {
        if q.cols() != self.rank() {
            return Err(shape_err("FactorSet::with_coarse", self.rank(), q.cols()));
        }
        self.coarse[mode.index()] = Some(q);
        Ok(self)
    }

    /// Sets the snapshot to the current fine factors.
    pub fn with_snapshot(mut self) -> Self {
        self.snapshot = Some(self.fine.clone());
        self
    }

    pub fn rank(&self) -> usize {
        self.fine[0].cols()
    }

    pub fn u(&self) -> &Matrix {
        &self.fine[0]
    }

    pub fn v(&self) -> &Matrix {
        &self.fine[1]
    }

    pub fn w(&self) -> &Matrix {
        &self.fine[2]
    }

    pub fn factor(&self, mode: Mode) -> &Matrix {
        &self.fine[mode.index()]
    }

    pub fn coarse_factor(&self, mode: Mode) -> Option<&Matrix> {
        self.coarse[mode.index()].as_ref()
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.fine[0].rows(), self.fine[1].rows(), self.fine[2].rows()]
    }

    pub fn reconstruct(&self) -> DenseTensor3 {
        reconstruct(&self.fine[0], &self.fine[1], &self.fine[2]).expect("ranks checked on construction")
    }

    pub(crate) fn check_rank(&self) -> Result<()> {
        let r = self.rank();
        let all = self.fine.iter().chain(self.coarse.iter().flatten());
        for m in all {
            if m.cols() != r {
                return Err(Error::ShapeMismatch {
                    op: "FactorSet",
                    expected: format!("rank {r}"),
                    found: format!("rank {}", m.cols()),
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.fine
            .iter()
            .chain(self.coarse.iter().flatten())
            .all(Matrix::is_finite)
    }
}

/// Kruskal operator: `t(i, j, k) = Σ_r u(i, r) v(j, r) w(k, r)`.
pub fn reconstruct(u: &Matrix, v: &Matrix, w: &Matrix) -> Result<DenseTensor3> {
    if u.cols() != v.cols() || u.cols() != w.cols() {
        return Err(shape_err("reconstruct", u.cols(), (v.cols(), w.cols())));
    }
    let shape = [u.rows(), v.rows(), w.rows()];
    let mut out = DenseTensor3::zeros(shape);
    let mut uv = vec![0.0; u.cols()];
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for ((s, &a), &b) in uv.iter_mut().zip(u.row(i)).zip(v.row(j)) {
                *s = a * b;
            }
            let o = out.offset(i, j, 0);
            let fiber = &mut out.as_mut_slice()[o..o + shape[2]];
            for (k, x) in fiber.iter_mut().enumerate() {
                *x = uv.iter().zip(w.row(k)).map(|(a, b)| a * b).sum();
            }
        }
    }
    Ok(out)
}

/// `‖target − [[u, v, w]]‖_F²` without materializing the reconstruction.
pub fn kruskal_residual_sq(target: &DenseTensor3, u: &Matrix, v: &Matrix, w: &Matrix) -> Result<f64> {
    let shape = target.shape();
    if [u.rows(), v.rows(), w.rows()] != shape {
        return Err(shape_err("kruskal_residual_sq", shape, [u.rows(), v.rows(), w.rows()]));
    }
    if u.cols() != v.cols() || u.cols() != w.cols() {
        return Err(shape_err("kruskal_residual_sq", u.cols(), (v.cols(), w.cols())));
    }
    let mut uv = vec![0.0; u.cols()];
    let mut total = 0.0;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for ((s, &a), &b) in uv.iter_mut().zip(u.row(i)).zip(v.row(j)) {
                *s = a * b;
            }
            for (k, &x) in target.fiber(i, j).iter().enumerate() {
                let r: f64 = uv.iter().zip(w.row(k)).map(|(a, b)| a * b).sum();
                total += (x - r) * (x - r);
            }
        }
    }
    Ok(total)
}

/// Equilibrates the column norms of U, V and W component by component.
///
/// Column `r` of each fine factor is normalized and multiplied by
/// `(‖U_r‖·‖V_r‖·‖W_r‖)^(1/3)`. A coarse factor is scaled by the same
/// multiplier as the fine factor of its mode, which keeps `Q = P·V` intact.
pub fn rescale_columns(fs: &FactorSet) -> Result<FactorSet> {
    const NAMES: [&str; 3] = ["U", "V", "W"];
    let mut out = fs.clone();
    for r in 0..fs.rank() {
        let norms = [fs.fine[0].col_norm(r), fs.fine[1].col_norm(r), fs.fine[2].col_norm(r)];
        for (m, &n) in norms.iter().enumerate() {
            if n == 0.0 {
                return Err(Error::ZeroColumn {
                    factor: NAMES[m],
                    column: r,
                });
            }
        }
        let f = (norms[0] * norms[1] * norms[2]).cbrt();
        for m in 0..3 {
            let s = f / norms[m];
            out.fine[m].scale_col(r, s);
            if let Some(q) = out.coarse[m].as_mut() {
                q.scale_col(r, s);
            }
        }
    }
    Ok(out)
}

/// Percentage of fitness, `1 − ‖target − approx‖_F / ‖target‖_F`.
pub fn pof(target: &DenseTensor3, approx: &DenseTensor3) -> Result<f64> {
    if target.shape() != approx.shape() {
        return Err(shape_err("pof", target.shape(), approx.shape()));
    }
    let norm = frobenius_norm(target);
    if norm == 0.0 {
        return Err(Error::ZeroNormTarget);
    }
    Ok(1.0 - frobenius_norm(&target.sub(approx)?) / norm)
}

/// [`pof`] against the reconstruction of `fs`, computed without forming it.
pub fn pof_factors(target: &DenseTensor3, fs: &FactorSet) -> Result<f64> {
    let norm = frobenius_norm(target);
    if norm == 0.0 {
        return Err(Error::ZeroNormTarget);
    }
    let res = kruskal_residual_sq(target, fs.u(), fs.v(), fs.w())?;
    Ok(1.0 - res.sqrt() / norm)
}
