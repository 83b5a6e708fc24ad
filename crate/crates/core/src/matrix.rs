use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `m × N` matrix of samples: one row per variable, one column per
/// sample. Entries are finite and both dimensions are at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DMatrix<f64>", into = "DMatrix<f64>")]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    /// Builds a matrix from sample vectors (each becomes one column).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let m = samples[0].len();
        if let Some(bad) = samples.iter().find(|s| s.len() != m) {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| samples[j][i]))
    }

    /// Builds a matrix from a row-major `rows × cols` buffer.
    pub fn from_row_slice(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(rows, cols, values))
    }

    /// Number of variables `m`.
    pub fn n_vars(&self) -> usize {
        self.0.nrows()
    }

    /// Number of samples `N`.
    pub fn n_samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn sample(&self, j: usize) -> DVectorView<'_, f64> {
        self.0.column(j)
    }

    pub fn sample_owned(&self, j: usize) -> DVector<f64> {
        self.0.column(j).into_owned()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Keeps every `stride`-th sample starting with the first.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter("stride must be at least 1".into()));
        }
        let keep: Vec<usize> = (0..self.n_samples()).step_by(stride).collect();
        Ok(Self(self.0.select_columns(keep.iter())))
    }

    /// Samples `start..end` as a new matrix.
    pub fn slice_samples(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.n_samples() {
            return Err(Error::InvalidParameter(format!(
                "sample range {start}..{end} out of bounds for {} samples",
                self.n_samples()
            )));
        }
        Ok(Self(self.0.columns(start, end - start).into_owned()))
    }

    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        self.0
            .column(i)
            .iter()
            .zip(self.0.column(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl TryFrom<DMatrix<f64>> for DataMatrix {
    type Error = Error;

    fn try_from(values: DMatrix<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<DataMatrix> for DMatrix<f64> {
    fn from(data: DataMatrix) -> Self {
        data.0
    }
}

impl AsRef<DMatrix<f64>> for DataMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub(crate) fn check_finite(values: &DMatrix<f64>) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    for j in 0..values.ncols() {
        for i in 0..values.nrows() {
            if !values[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}
