//! Projection bases for monitoring: OLPP (and its SVD formulation), LPP, PCA
//! and dynamic PCA.
//!
//! Every fitted model maps a normalized sample `x` to `y = Wᵀx`. OLPP, PCA and
//! DPCA bases have orthonormal columns; LPP columns are unit length only.

mod olpp;
mod pca;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use olpp::{
    fit_lpp, fit_olpp, fit_olpp_svd_variant, locality_matrices, olpp_from_matrices, EigenOrder,
};
pub use pca::{cumulative_variance_dim, fit_dpca, fit_pca, stack_lagged, DimSpec};

/// Tolerance on `‖WᵀW - I‖_max` for the orthonormal methods.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Olpp,
    Lpp,
    Pca,
    Dpca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Olpp => "olpp",
            Method::Lpp => "lpp",
            Method::Pca => "pca",
            Method::Dpca => "dpca",
        }
    }

    pub fn is_orthonormal(self) -> bool {
        !matches!(self, Method::Lpp)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "olpp" => Ok(Method::Olpp),
            "lpp" => Ok(Method::Lpp),
            "pca" => Ok(Method::Pca),
            "dpca" => Ok(Method::Dpca),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

/// How `X D Xᵀ` is made invertible before the locality eigenproblems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularStrategy {
    /// Use `X D Xᵀ` as is; fails when it is singular.
    NoRemedy,
    /// Project onto the leading principal components first (enough of them
    /// to keep `variance_kept` of the variance, capped at numerical rank) and
    /// return `W = W_pca · W_olpi`.
    PcaProject { variance_kept: f64 },
    /// `X D Xᵀ + βI`.
    Regularize { beta: f64 },
    /// `X D Xᵀ + βI` with `β = scale · trace(X D Xᵀ) / m`.
    ScaledRegularize { scale: f64 },
    /// Replace the inverse with the Moore–Penrose pseudo-inverse.
    PseudoInverse,
}

impl Default for SingularStrategy {
    fn default() -> Self {
        SingularStrategy::ScaledRegularize { scale: 1e-6 }
    }
}

impl SingularStrategy {
    pub const DEFAULT_VARIANCE_KEPT: f64 = 0.999;

    pub fn validate(&self) -> Result<()> {
        match *self {
            SingularStrategy::PcaProject { variance_kept }
                if !(variance_kept > 0.0 && variance_kept <= 1.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "variance_kept {variance_kept} must lie in (0, 1]"
                )))
            }
            SingularStrategy::Regularize { beta } if !(beta > 0.0 && beta.is_finite()) => Err(
                Error::InvalidParameter(format!("beta {beta} must be positive")),
            ),
            SingularStrategy::ScaledRegularize { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "regularization scale {scale} must be positive"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A fitted projection basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    pub method: Method,
    /// `input_dim × dim` basis.
    pub w: DMatrix<f64>,
    /// Singular-matrix remedy as resolved at fit time (OLPP/LPP only).
    pub strategy: Option<SingularStrategy>,
    /// DPCA lag; 0 for static methods.
    pub lag: usize,
    /// Per-column eigenvalue: the locality objective for OLPP/LPP, the
    /// variance captured for PCA/DPCA.
    pub spectrum: Vec<f64>,
}

impl ProjectionModel {
    /// Retained dimension `l`.
    pub fn dim(&self) -> usize {
        self.w.ncols()
    }

    /// Length of the (possibly lag-stacked) vectors the basis acts on.
    pub fn input_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn orthonormality_error(&self) -> f64 {
        crate::linalg::orthonormality_error(&self.w)
    }
}

/// `y = Wᵀx`. DPCA models expect the lag-stacked sample.
pub fn project(model: &ProjectionModel, x: &DVector<f64>) -> Result<DVector<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            found: x.len(),
        });
    }
    Ok(model.w.tr_mul(x))
}
