use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Method, ProjectionModel};
use crate::error::{Error, Result};
use crate::linalg::sym_eig;
use crate::matrix::DataMatrix;

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DimSpec {
    Count(usize),
    /// Smallest count whose cumulative explained variance reaches the fraction.
    Variance(f64),
}

/// Principal axes of the sample covariance, largest variance first.
pub fn fit_pca(x: &DataMatrix, dim: DimSpec) -> Result<ProjectionModel> {
    let (values, vectors) = principal_axes(x)?;
    let l = match dim {
        DimSpec::Count(l) => {
            if l == 0 || l > x.n_vars() {
                return Err(Error::InvalidParameter(format!(
                    "PCA dimension {l} must lie in 1..={}",
                    x.n_vars()
                )));
            }
            l
        }
        DimSpec::Variance(fraction) => cumulative_variance_dim(&values, fraction)?,
    };
    Ok(ProjectionModel {
        method: Method::Pca,
        w: vectors.columns(0, l).into_owned(),
        strategy: None,
        lag: 0,
        spectrum: values[..l].to_vec(),
    })
}

/// Covariance eigenvalues (descending) and matching unit eigenvectors.
pub(crate) fn principal_axes(x: &DataMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::InvalidParameter("PCA needs at least two samples".into()));
    }
    let data = x.as_matrix();
    let mean = data.column_mean();
    let mut centered = data.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = &centered * centered.transpose() / (n - 1) as f64;
    let eig = sym_eig(&cov)?;
    let m = x.n_vars();
    let values: Vec<f64> = (0..m).rev().map(|i| eig.values[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.vectors[(r, m - 1 - c)]);
    Ok((values, vectors))
}

/// Smallest `l` with `Σ_{i<l} λ_i ≥ fraction · Σ λ_i` (eigenvalues descending).
pub fn cumulative_variance_dim(descending: &[f64], fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "variance fraction {fraction} must lie in (0, 1]"
        )));
    }
    let positive: Vec<f64> = descending.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = positive.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution);
    }
    let target = fraction * total;
    let mut acc = 0.0;
    for (i, v) in positive.iter().enumerate() {
        acc += v;
        // relative slack so fraction = 1 stops at the last non-zero component
        if acc >= target * (1.0 - 1e-12) {
            return Ok(i + 1);
        }
    }
    Ok(positive.len())
}

/// Stacks each sample with its `lag` predecessors, newest first:
/// column `t` is `[x_{t+lag}; x_{t+lag-1}; …; x_t]`.
pub fn stack_lagged(x: &DataMatrix, lag: usize) -> Result<DataMatrix> {
    let (m, n) = (x.n_vars(), x.n_samples());
    if n <= lag {
        return Err(Error::InvalidParameter(format!(
            "lag {lag} needs more than {lag} samples, got {n}"
        )));
    }
    let data = x.as_matrix();
    let stacked = DMatrix::from_fn((lag + 1) * m, n - lag, |r, t| {
        let (block, var) = (r / m, r % m);
        data[(var, t + lag - block)]
    });
    DataMatrix::new(stacked)
}

/// PCA on the lag-stacked matrix.
pub fn fit_dpca(x: &DataMatrix, lag: usize, dim: DimSpec) -> Result<ProjectionModel> {
    let stacked = stack_lagged(x, lag)?;
    let mut model = fit_pca(&stacked, dim)?;
    model.method = Method::Dpca;
    model.lag = lag;
    Ok(model)
}
