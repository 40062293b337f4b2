use crate::error::{Coord, Error, Result};
use crate::tensor::DenseTensor3;

/// Coordinate list of observed entries.
///
/// A coordinate present in the list marks an observed entry; its value is the
/// observation. Entries are kept sorted by linear index so every operation
/// that iterates them is independent of the order they were supplied in.
#[derive(Debug, Clone, PartialEq)]
pub struct CooObservations {
    shape: [usize; 3],
    coords: Vec<[usize; 3]>,
    values: Vec<f64>,
}

impl CooObservations {
    pub fn empty(shape: [usize; 3]) -> Self {
        CooObservations {
            shape,
            coords: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds an observation list from 0-based `(index, value)` pairs,
    /// rejecting out-of-range indices, duplicates and non-finite values.
    pub fn new(shape: [usize; 3], entries: Vec<([usize; 3], f64)>) -> Result<Self> {
        let obs = Self::new_unchecked(shape, entries);
        obs.check()?;
        Ok(obs)
    }

    /// Like [`CooObservations::new`] with 1-based indices.
    pub fn from_one_based(shape: [usize; 3], entries: Vec<([usize; 3], f64)>) -> Result<Self> {
        let mut zero = Vec::with_capacity(entries.len());
        for (idx, v) in entries {
            if idx.iter().zip(&shape).any(|(&x, &n)| x == 0 || x > n) {
                return Err(Error::IndexOutOfRange { index: idx, shape });
            }
            zero.push(([idx[0] - 1, idx[1] - 1, idx[2] - 1], v));
        }
        Self::new(shape, zero)
    }

    /// Sorts but does not validate; [`CooObservations::check`] reports
    /// whatever is wrong.
    pub fn new_unchecked(shape: [usize; 3], mut entries: Vec<([usize; 3], f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let (coords, values) = entries.into_iter().unzip();
        CooObservations { shape, coords, values }
    }

    /// Every stored coordinate of a dense tensor.
    pub fn from_dense(t: &DenseTensor3) -> Self {
        let shape = t.shape();
        let mut coords = Vec::with_capacity(t.len());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    coords.push([i, j, k]);
                }
            }
        }
        CooObservations {
            shape,
            coords,
            values: t.as_slice().to_vec(),
        }
    }

    /// Checks the type invariants, returning the first violation.
    pub fn check(&self) -> Result<()> {
        for (n, (c, &v)) in self.coords.iter().zip(&self.values).enumerate() {
            if c.iter().zip(&self.shape).any(|(&x, &s)| x >= s) {
                return Err(Error::IndexOutOfRange {
                    index: *c,
                    shape: self.shape,
                });
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    coord: Coord::from_zero_based(*c),
                    value: v,
                });
            }
            if n > 0 && self.coords[n - 1] == *c {
                return Err(Error::DuplicateCoordinate(Coord::from_zero_based(*c)));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[usize; 3]] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        self.coords.iter().copied().zip(self.values.iter().copied())
    }

    /// Same coordinates, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.coords.len() {
            return Err(crate::error::shape_err(
                "CooObservations::with_values",
                self.coords.len(),
                values.len(),
            ));
        }
        Ok(CooObservations {
            shape: self.shape,
            coords: self.coords.clone(),
            values,
        })
    }

    /// Dense tensor with observed values and zeros elsewhere.
    pub fn to_dense(&self) -> DenseTensor3 {
        let mut t = DenseTensor3::zeros(self.shape);
        for (&[i, j, k], &v) in self.coords.iter().zip(&self.values) {
            t[(i, j, k)] = v;
        }
        t
    }

    /// 0/1 mask tensor of observed coordinates.
    pub fn mask(&self) -> DenseTensor3 {
        let mut t = DenseTensor3::zeros(self.shape);
        for &[i, j, k] in &self.coords {
            t[(i, j, k)] = 1.0;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_rejected() {
        let e = CooObservations::new([2, 2, 2], vec![([0, 1, 1], 1.0), ([0, 1, 1], 2.0)]);
        assert!(matches!(e, Err(Error::DuplicateCoordinate(Coord([1, 2, 2])))));
    }

    #[test]
    fn ordering_is_canonical() {
        let a = CooObservations::new([2, 2, 2], vec![([1, 0, 0], 1.0), ([0, 0, 1], 2.0)]).unwrap();
        let b = CooObservations::new([2, 2, 2], vec![([0, 0, 1], 2.0), ([1, 0, 0], 1.0)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn one_based_zero_index_rejected() {
        let e = CooObservations::from_one_based([2, 2, 2], vec![([0, 1, 1], 1.0)]);
        assert!(matches!(e, Err(Error::IndexOutOfRange { .. })));
    }
}
