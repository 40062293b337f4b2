//! Dense symmetric solvers for the `R × R` normal equations.
//!
//! Right-hand sides are stored one system per row (`n × R`), so a solution
//! `X` satisfies `X · gram = rhs`; with `gram` symmetric each row solves
//! `gram · x = b`.

use crate::error::{shape_err, Error, Result};
use crate::tensor::Matrix;

fn check_system(op: &'static str, gram: &Matrix, rhs: &Matrix) -> Result<()> {
    if gram.rows() != gram.cols() {
        return Err(shape_err(op, "square gram", gram.shape()));
    }
    if rhs.cols() != gram.rows() {
        return Err(shape_err(op, gram.rows(), rhs.cols()));
    }
    Ok(())
}

/// `rounds` sweeps of `X ← w·(B − X·R_off)·D⁻¹ + (1−w)·X`, where
/// `D = diag(gram) + ε` and `R_off` is the off-diagonal part of `gram`.
pub fn jacobi_sweeps(
    gram: &Matrix,
    rhs: &Matrix,
    x0: &Matrix,
    rounds: usize,
    weight: f64,
    epsilon: f64,
) -> Result<Matrix> {
    check_system("jacobi_solve", gram, rhs)?;
    if x0.shape() != rhs.shape() {
        return Err(shape_err("jacobi_solve", rhs.shape(), x0.shape()));
    }
    let r = gram.rows();
    let inv_diag: Vec<f64> = (0..r).map(|a| 1.0 / (gram[(a, a)] + epsilon)).collect();
    let mut x = x0.clone();
    let mut next = x0.clone();
    for _ in 0..rounds {
        for n in 0..rhs.rows() {
            let xr = x.row(n);
            let b = rhs.row(n);
            let out = next.row_mut(n);
            for a in 0..r {
                let g = gram.row(a);
                let full: f64 = g.iter().zip(xr).map(|(g, x)| g * x).sum();
                let off = full - g[a] * xr[a];
                out[a] = weight * (b[a] - off) * inv_diag[a] + (1.0 - weight) * xr[a];
            }
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// One stage-1 solve: `cfg.jacobi_rounds` weighted Jacobi sweeps from `x0`,
/// with the weight capped by [`stable_jacobi_weight`].
pub fn jacobi_solve(gram: &Matrix, rhs: &Matrix, x0: &Matrix, cfg: &crate::solver::SolverConfig) -> Result<Matrix> {
    let w = stable_jacobi_weight(gram, cfg.jacobi_weight, cfg.diag_epsilon)?;
    jacobi_sweeps(gram, rhs, x0, cfg.jacobi_rounds, w, cfg.diag_epsilon)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors `a + ridge·I`. Fails with the 1-based pivot that is not
    /// positive.
    pub fn new(a: &Matrix, ridge: f64) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(shape_err("Cholesky", "square matrix", a.shape()));
        }
        let n = a.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)] + ridge;
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: j + 1 });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves `(a + ridge·I)·x = b` for each row `b` of `rhs`.
    pub fn solve_rows(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.l.rows();
        if rhs.cols() != n {
            return Err(shape_err("Cholesky::solve_rows", n, rhs.cols()));
        }
        let mut out = rhs.clone();
        for r in 0..rhs.rows() {
            let x = out.row_mut(r);
            for i in 0..n {
                let li = self.l.row(i);
                let mut s = x[i];
                for k in 0..i {
                    s -= li[k] * x[k];
                }
                x[i] = s / li[i];
            }
            for i in (0..n).rev() {
                let mut s = x[i];
                for k in i + 1..n {
                    s -= self.l[(k, i)] * x[k];
                }
                x[i] = s / self.l[(i, i)];
            }
        }
        Ok(out)
    }
}

/// Stage-2 solve of `(gram + ridge·I)·X = rhs`, one factorization shared by
/// all rows.
pub fn cholesky_solve(gram: &Matrix, rhs: &Matrix, ridge: f64) -> Result<Matrix> {
    check_system("cholesky_solve", gram, rhs)?;
    Cholesky::new(gram, ridge)?.solve_rows(rhs)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn symmetric_eigenvalues(mut m: Matrix) -> Vec<f64> {
    let n = m.rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| m[(a, b)] * m[(a, b)])
            .sum();
        let diag: f64 = (0..n).map(|a| m[(a, a)] * m[(a, a)]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - sn * mkq;
                    m[(k, q)] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - sn * mqk;
                    m[(q, k)] = sn * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|a| m[(a, a)]).collect()
}

/// Eigenvalues of `D⁻¹·gram` with `D = diag(gram) + ε`, via the similar
/// symmetric matrix `D^(-1/2)·gram·D^(-1/2)`.
fn scaled_eigenvalues(gram: &Matrix, epsilon: f64) -> Result<Vec<f64>> {
    if gram.rows() != gram.cols() {
        return Err(shape_err("jacobi_spectral_radius", "square gram", gram.shape()));
    }
    let n = gram.rows();
    let s: Vec<f64> = (0..n).map(|a| 1.0 / (gram[(a, a)] + epsilon).sqrt()).collect();
    Ok(symmetric_eigenvalues(Matrix::from_fn(n, n, |a, b| {
        s[a] * gram[(a, b)] * s[b]
    })))
}

/// Spectral radius of the Jacobi iteration matrix `I − w·D⁻¹·gram`.
pub fn jacobi_spectral_radius(gram: &Matrix, weight: f64, epsilon: f64) -> Result<f64> {
    Ok(scaled_eigenvalues(gram, epsilon)?
        .into_iter()
        .map(|l| (1.0 - weight * l).abs())
        .fold(0.0, f64::max))
}

/// Largest weight not above `weight` with `weight·λ_max(D⁻¹·gram) ≤ 1.5`,
/// which bounds the iteration's spectral radius below one for any
/// positive definite gram. Diagonally dominant grams (`λ_max < 2`) keep
/// weights up to 0.75 unchanged.
pub fn stable_jacobi_weight(gram: &Matrix, weight: f64, epsilon: f64) -> Result<f64> {
    let lmax = scaled_eigenvalues(gram, epsilon)?.into_iter().fold(0.0, f64::max);
    Ok(if weight * lmax > 1.5 { 1.5 / lmax } else { weight })
}
