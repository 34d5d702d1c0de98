//! Row-major numeric tables.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major `rows × cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Length {
                left: data.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: alloc::vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Copies the given rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Copies the given columns, in order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }
}

/// Named `n × d` table of observations with per-row weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    values: Matrix,
    weights: Vec<f64>,
    discrete: Vec<bool>,
}

impl Dataset {
    /// Builds a dataset with uniform weights `1/n` and all-continuous columns.
    pub fn new(names: Vec<String>, values: Matrix) -> Result<Self> {
        if names.len() != values.cols() {
            return Err(Error::Dimension {
                expected: values.cols(),
                actual: names.len(),
            });
        }
        let n = values.rows();
        let weights = alloc::vec![if n == 0 { 0.0 } else { 1.0 / n as f64 }; n];
        let discrete = alloc::vec![false; values.cols()];
        Ok(Self {
            names,
            values,
            weights,
            discrete,
        })
    }

    /// Dataset with default column names `x0..x{d-1}`.
    pub fn with_default_names(values: Matrix) -> Self {
        let names = default_names(values.cols());
        Self::new(names, values).expect("names sized to columns")
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.n_rows() {
            return Err(Error::Length {
                left: weights.len(),
                right: self.n_rows(),
            });
        }
        self.weights = weights;
        Ok(self)
    }

    /// Marks columns as discrete; they are conditioned on with identity kernels.
    pub fn with_discrete(mut self, discrete: Vec<bool>) -> Result<Self> {
        if discrete.len() != self.n_cols() {
            return Err(Error::Dimension {
                expected: self.n_cols(),
                actual: discrete.len(),
            });
        }
        self.discrete = discrete;
        Ok(self)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values.get(row, col)
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        self.values.row(row)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values.column(col)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn discrete(&self) -> &[bool] {
        &self.discrete
    }

    /// Subset of rows; weights are reset to uniform.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let values = self.values.select_rows(rows);
        let n = values.rows();
        Self {
            names: self.names.clone(),
            values,
            weights: alloc::vec![if n == 0 { 0.0 } else { 1.0 / n as f64 }; n],
            discrete: self.discrete.clone(),
        }
    }

    pub(crate) fn values_mut(&mut self) -> &mut Matrix {
        &mut self.values
    }
}

pub fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Read access to a table whose rows carry non-negative weights.
///
/// Implemented by [`Dataset`] and [`crate::AugmentedSet`] so the metrics can
/// compare either with either.
pub trait WeightedTable {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    fn value(&self, row: usize, col: usize) -> f64;
    fn weight(&self, row: usize) -> f64;

    fn column_values(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.value(r, col)).collect()
    }

    fn row_weights(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.weight(r)).collect()
    }
}

impl WeightedTable for Dataset {
    fn n_rows(&self) -> usize {
        Dataset::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        Dataset::n_cols(self)
    }

    fn value(&self, row: usize, col: usize) -> f64 {
        self.get(row, col)
    }

    fn weight(&self, row: usize) -> f64 {
        self.weights[row]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matrix_shape_checked() {
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.column(0), vec![1.0, 3.0]);
        assert_eq!(m.select_columns(&[1]).as_slice(), &[2.0, 4.0]);
        assert_eq!(m.select_rows(&[1, 1]).as_slice(), &[3.0, 4.0, 3.0, 4.0]);
    }

    #[test]
    fn dataset_defaults_uniform_weights() {
        let m = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]).unwrap();
        let ds = Dataset::with_default_names(m);
        assert_eq!(ds.names(), &["x0"]);
        assert_eq!(ds.weights(), &[0.25; 4]);
        assert_eq!(ds.discrete(), &[false]);
    }
}
