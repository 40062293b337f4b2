use std::ops::{Index, IndexMut};

use crate::error::{shape_err, Error, Result};
use crate::tensor::{Matrix, Mode};

/// Dense order-3 tensor stored row-major, `k` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl DenseTensor3 {
    pub fn zeros(shape: [usize; 3]) -> Self {
        DenseTensor3 {
            shape,
            data: vec![0.0; shape[0] * shape[1] * shape[2]],
        }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(shape_err("DenseTensor3::from_vec", shape, data.len()));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            let idx = [pos / (shape[1] * shape[2]), pos / shape[2] % shape[1], pos % shape[2]];
            return Err(Error::NonFinite {
                coord: crate::error::Coord::from_zero_based(idx),
                value: data[pos],
            });
        }
        Ok(DenseTensor3 { shape, data })
    }

    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.iter().product());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    data.push(f(i, j, k));
                }
            }
        }
        DenseTensor3 { shape, data }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn dim(&self, mode: Mode) -> usize {
        self.shape[mode.index()]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    /// The contiguous fiber `t(i, j, :)`.
    #[inline]
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let start = self.offset(i, j, 0);
        &self.data[start..start + self.shape[2]]
    }

    /// Inverse of [`crate::tensor::unfold`].
    pub fn fold(m: &Matrix, mode: Mode, shape: [usize; 3]) -> Result<Self> {
        let rows = shape[mode.index()];
        let cols = shape.iter().product::<usize>() / rows.max(1);
        if m.shape() != (rows, cols) {
            return Err(shape_err("fold", (rows, cols), m.shape()));
        }
        let [_, i2, i3] = shape;
        Ok(DenseTensor3::from_fn(shape, |i, j, k| match mode {
            Mode::One => m[(i, j * i3 + k)],
            Mode::Two => m[(j, i * i3 + k)],
            Mode::Three => m[(k, i * i2 + j)],
        }))
    }

    pub fn scaled(&self, s: f64) -> DenseTensor3 {
        DenseTensor3 {
            shape: self.shape,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, other: &DenseTensor3) -> Result<DenseTensor3> {
        if self.shape != other.shape {
            return Err(shape_err("sub", self.shape, other.shape));
        }
        Ok(DenseTensor3 {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Sums the tensor along `mode`, leaving that mode with size 1.
    pub fn sum_along(&self, mode: Mode) -> DenseTensor3 {
        let mut shape = self.shape;
        shape[mode.index()] = 1;
        let mut out = DenseTensor3::zeros(shape);
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                for k in 0..self.shape[2] {
                    let mut idx = [i, j, k];
                    idx[mode.index()] = 0;
                    let o = out.offset(idx[0], idx[1], idx[2]);
                    out.data[o] += self[(i, j, k)];
                }
            }
        }
        out
    }

    /// Restricts each mode to the given 0-based index lists, in order.
    pub fn select(&self, indices: [&[usize]; 3]) -> Result<DenseTensor3> {
        for (m, idx) in indices.iter().enumerate() {
            if let Some(&bad) = idx.iter().find(|&&x| x >= self.shape[m]) {
                let mut index = [0; 3];
                index[m] = bad;
                return Err(Error::IndexOutOfRange {
                    index,
                    shape: self.shape,
                });
            }
        }
        let shape = [indices[0].len(), indices[1].len(), indices[2].len()];
        let mut data = Vec::with_capacity(shape.iter().product());
        for &i in indices[0] {
            for &j in indices[1] {
                let fiber = self.fiber(i, j);
                data.extend(indices[2].iter().map(|&k| fiber[k]));
            }
        }
        Ok(DenseTensor3 { shape, data })
    }

    pub fn max_abs_diff(&self, other: &DenseTensor3) -> f64 {
        assert_eq!(self.shape, other.shape, "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize, usize)> for DenseTensor3 {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.data[self.offset(i, j, k)]
    }
}

impl IndexMut<(usize, usize, usize)> for DenseTensor3 {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}
