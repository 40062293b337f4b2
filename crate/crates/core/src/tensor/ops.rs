use crate::error::{shape_err, Result};
use crate::tensor::{CooObservations, DenseTensor3, Matrix, Mode};

/// Matricizes `t` along `mode`, last remaining index fastest.
///
/// Mode 1 maps `(i, j, k)` to `(i, j·I3 + k)`, mode 2 to `(j, i·I3 + k)` and
/// mode 3 to `(k, i·I2 + j)`.
pub fn unfold(t: &DenseTensor3, mode: Mode) -> Matrix {
    let [i1, i2, i3] = t.shape();
    let mut m = Matrix::zeros(t.dim(mode), t.len() / t.dim(mode).max(1));
    for i in 0..i1 {
        for j in 0..i2 {
            for (k, &x) in t.fiber(i, j).iter().enumerate() {
                let (r, c) = match mode {
                    Mode::One => (i, j * i3 + k),
                    Mode::Two => (j, i * i3 + k),
                    Mode::Three => (k, i * i2 + j),
                };
                m[(r, c)] = x;
            }
        }
    }
    m
}

/// Column-wise Kronecker product.
pub fn khatri_rao(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(shape_err("khatri_rao", a.cols(), b.cols()));
    }
    let mut out = Matrix::zeros(a.rows() * b.rows(), a.cols());
    for i in 0..a.rows() {
        let arow = a.row(i);
        for j in 0..b.rows() {
            let orow = out.row_mut(i * b.rows() + j);
            for ((o, &x), &y) in orow.iter_mut().zip(arow).zip(b.row(j)) {
                *o = x * y;
            }
        }
    }
    Ok(out)
}

pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = b.shape();
    Matrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(shape_err("hadamard", a.shape(), b.shape()));
    }
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}

/// `t ×_mode p`: replaces the `mode` dimension with `p.rows()`.
pub fn mode_product(t: &DenseTensor3, p: &Matrix, mode: Mode) -> Result<DenseTensor3> {
    if p.cols() != t.dim(mode) {
        return Err(shape_err("mode_product", t.dim(mode), p.cols()));
    }
    let [i1, i2, i3] = t.shape();
    let mut shape = t.shape();
    shape[mode.index()] = p.rows();
    let mut out = DenseTensor3::zeros(shape);
    match mode {
        Mode::One => {
            for r in 0..p.rows() {
                for (i, &w) in p.row(r).iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let src = &t.as_slice()[i * i2 * i3..(i + 1) * i2 * i3];
                    let dst = &mut out.as_mut_slice()[r * i2 * i3..(r + 1) * i2 * i3];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        Mode::Two => {
            let pr = p.rows();
            for i in 0..i1 {
                for r in 0..pr {
                    for (j, &w) in p.row(r).iter().enumerate() {
                        if w == 0.0 {
                            continue;
                        }
                        let src = t.fiber(i, j);
                        let o = out.offset(i, r, 0);
                        for (d, s) in out.as_mut_slice()[o..o + i3].iter_mut().zip(src) {
                            *d += w * s;
                        }
                    }
                }
            }
        }
        Mode::Three => {
            for i in 0..i1 {
                for j in 0..i2 {
                    let fiber = t.fiber(i, j);
                    let o = out.offset(i, j, 0);
                    let dst = &mut out.as_mut_slice()[o..o + p.rows()];
                    for (d, r) in dst.iter_mut().zip(0..p.rows()) {
                        *d = p.row(r).iter().zip(fiber).map(|(a, b)| a * b).sum();
                    }
                }
            }
        }
    }
    Ok(out)
}

fn check_factors(op: &'static str, shape: [usize; 3], f1: &Matrix, f2: &Matrix, mode: Mode) -> Result<()> {
    let (a, b) = mode.others();
    if f1.cols() != f2.cols() {
        return Err(shape_err(op, f1.cols(), f2.cols()));
    }
    if f1.rows() != shape[a.index()] || f2.rows() != shape[b.index()] {
        return Err(shape_err(
            op,
            (shape[a.index()], shape[b.index()]),
            (f1.rows(), f2.rows()),
        ));
    }
    Ok(())
}

/// `unfold(t, mode) · khatri_rao(f1, f2)` without forming either operand.
///
/// `f1` and `f2` are the factors of the two other modes in increasing mode
/// order. The result is `I_mode × R`.
pub fn mttkrp_dense(t: &DenseTensor3, f1: &Matrix, f2: &Matrix, mode: Mode) -> Result<Matrix> {
    let shape = t.shape();
    check_factors("mttkrp_dense", shape, f1, f2, mode)?;
    let rank = f1.cols();
    let [i1, i2, _] = shape;
    let mut out = Matrix::zeros(shape[mode.index()], rank);
    let mut tmp = vec![0.0; rank];
    match mode {
        Mode::One | Mode::Two => {
            // f2 is always the mode-3 factor here; contract the contiguous fiber first.
            for i in 0..i1 {
                for j in 0..i2 {
                    tmp.iter_mut().for_each(|x| *x = 0.0);
                    for (k, &x) in t.fiber(i, j).iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for (acc, &w) in tmp.iter_mut().zip(f2.row(k)) {
                            *acc += x * w;
                        }
                    }
                    let (row, other) = if mode == Mode::One { (i, j) } else { (j, i) };
                    let orow = out.row_mut(row);
                    for ((o, &a), &s) in orow.iter_mut().zip(f1.row(other)).zip(&tmp) {
                        *o += a * s;
                    }
                }
            }
        }
        Mode::Three => {
            for i in 0..i1 {
                for j in 0..i2 {
                    for ((s, &a), &b) in tmp.iter_mut().zip(f1.row(i)).zip(f2.row(j)) {
                        *s = a * b;
                    }
                    for (k, &x) in t.fiber(i, j).iter().enumerate() {
                        if x == 0.0 {
                            continue;
                        }
                        for (o, &s) in out.row_mut(k).iter_mut().zip(&tmp) {
                            *o += x * s;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// MTTKRP over stored coordinates only; equals [`mttkrp_dense`] on the
/// densified observations.
pub fn mttkrp_sparse(obs: &CooObservations, f1: &Matrix, f2: &Matrix, mode: Mode) -> Result<Matrix> {
    check_factors("mttkrp_sparse", obs.shape(), f1, f2, mode)?;
    let (a, b) = mode.others();
    let mut out = Matrix::zeros(obs.shape()[mode.index()], f1.cols());
    for (c, x) in obs.iter() {
        let orow = out.row_mut(c[mode.index()]);
        for ((o, &p), &q) in orow.iter_mut().zip(f1.row(c[a.index()])).zip(f2.row(c[b.index()])) {
            *o += x * p * q;
        }
    }
    Ok(out)
}

/// Kruskal reconstruction `[[u, v, w]]` evaluated at each stored coordinate.
pub fn masked_reconstruction(mask: &CooObservations, u: &Matrix, v: &Matrix, w: &Matrix) -> Result<CooObservations> {
    let shape = mask.shape();
    if u.cols() != v.cols() || u.cols() != w.cols() {
        return Err(shape_err("masked_reconstruction", u.cols(), (v.cols(), w.cols())));
    }
    if [u.rows(), v.rows(), w.rows()] != shape {
        return Err(shape_err(
            "masked_reconstruction",
            shape,
            [u.rows(), v.rows(), w.rows()],
        ));
    }
    let values = mask
        .coords()
        .iter()
        .map(|&[i, j, k]| {
            u.row(i)
                .iter()
                .zip(v.row(j))
                .zip(w.row(k))
                .map(|((a, b), c)| a * b * c)
                .sum()
        })
        .collect();
    mask.with_values(values)
}

pub fn frobenius_norm(t: &DenseTensor3) -> f64 {
    t.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}
