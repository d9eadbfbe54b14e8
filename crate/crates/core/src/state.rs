use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};

/// Row-major `N x d` matrix of node states, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StateMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols} = {} entries", rows * cols),
                actual: format!("{}", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: format!("{cols} columns"),
                actual: format!("{} columns in row {bad}", rows[bad].len()),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Single-column state from scalar opinions.
    pub fn column(values: &[f64]) -> Self {
        Self {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    /// Entries drawn i.i.d. from the standard normal distribution.
    pub fn random_normal(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { rows, cols, data }
    }

    /// Entries drawn i.i.d. from `U[low, high)`.
    pub fn random_uniform(rows: usize, cols: usize, low: f64, high: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new(low, high).expect("low < high");
        let data = (0..rows * cols).map(|_| dist.sample(&mut rng)).collect();
        Self { rows, cols, data }
    }

    /// Random unit-norm rows (normalised Gaussian draws).
    pub fn random_unit_rows(rows: usize, cols: usize, seed: u64) -> Self {
        let mut x = Self::random_normal(rows, cols, seed);
        for i in 0..rows {
            let row = x.row_mut(i);
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        x
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.cols + k]
    }

    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        self.data[i * self.cols + k] = value;
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub(crate) fn check_rows(&self, expected: usize) -> Result<()> {
        if self.rows != expected {
            return Err(Error::DimensionMismatch {
                expected: format!("{expected} rows"),
                actual: format!("{} rows", self.rows),
            });
        }
        Ok(())
    }

    /// `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &Self) -> Self {
        debug_assert!(self.same_shape(other));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + scale * b).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        for row in self.row_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.rows.max(1) as f64);
        means
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(StateMatrix::from_vec(2, 2, vec![0.0; 3]).is_err());
        assert!(StateMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let x = StateMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(x.row(1), &[3.0, 4.0]);
        assert_eq!(x.column_means(), vec![2.0, 3.0]);
    }

    #[test]
    fn unit_rows_have_unit_norm() {
        let x = StateMatrix::random_unit_rows(10, 20, 5);
        for row in x.row_iter() {
            let n: f64 = row.iter().map(|v| v * v).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(x, StateMatrix::random_unit_rows(10, 20, 5));
    }
}
