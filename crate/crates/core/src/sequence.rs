use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multivariate time series, stored time-major (`T` rows of `m` values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    data: Vec<f64>,
    len: usize,
    dim: usize,
    pub id: Option<String>,
}

impl Sequence {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let len = rows.len();
        if len == 0 {
            return Err(Error::Empty("sequence has no time steps".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::Empty("sequence has zero input dimensions".into()));
        }
        let mut data = Vec::with_capacity(len * dim);
        for (t, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!("time step {t} has {} values, expected {dim}", row.len())));
            }
            data.extend(row);
        }
        Self::from_flat(data, dim)
    }

    /// Builds a sequence from time-major flat data.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::Empty("sequence must have T >= 1 and m >= 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Shape(format!("{} values do not divide into rows of {dim}", data.len())));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sequence entry {i} is {}", data[i])));
        }
        Ok(Self {
            len: data.len() / dim,
            data,
            dim,
            id: None,
        })
    }

    /// Univariate sequence (`m = 1`).
    pub fn scalar(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = Some(id.into());
        self
    }

    /// Number of time steps `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Input dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Input at 0-based time step `t`.
    pub fn step(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Element-wise equality of the values (ids are ignored).
    pub fn same_values(&self, other: &Sequence) -> bool {
        self.dim == other.dim && self.data == other.data
    }

    /// Flattened values zero-padded at the tail to `len` time steps.
    pub fn padded_flat(&self, len: usize) -> Vec<f64> {
        let mut v = self.data.clone();
        v.resize(len.max(self.len) * self.dim, 0.0);
        v
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four independent accumulators let the compiler vectorise
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shape_and_values() {
        assert!(Sequence::new(vec![]).is_err());
        assert!(Sequence::new(vec![vec![]]).is_err());
        assert!(Sequence::new(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(Sequence::scalar(&[1.0, f64::NAN]).is_err());
        let s = Sequence::new(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!((s.len(), s.dim()), (3, 2));
        assert_eq!(s.step(1), &[3.0, 4.0]);
    }

    #[test]
    fn pads_at_the_tail() {
        let s = Sequence::scalar(&[1.0, 2.0]).unwrap();
        assert_eq!(s.padded_flat(4), vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(s.padded_flat(1), vec![1.0, 2.0]);
    }

    #[test]
    fn equality_ignores_ids() {
        let a = Sequence::scalar(&[1.0]).unwrap().with_id("a");
        let b = Sequence::scalar(&[1.0]).unwrap().with_id("b");
        assert!(a.same_values(&b));
    }
}
