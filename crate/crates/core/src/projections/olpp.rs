//! Orthogonal locality preserving projections.
//!
//! With `H = X L Xᵀ` and `G = X D Xᵀ`, the first vector minimizes the ratio
//! `aᵀHa / aᵀGa`; every later vector minimizes it subject to being orthogonal
//! to the earlier ones. The classical iteration takes `a_k` as the
//! smallest-eigenvalue eigenvector of
//!
//! ```text
//! M(k) = { I - G⁻¹ A B⁻¹ Aᵀ } G⁻¹ H,     B = Aᵀ G⁻¹ A,   A = [a_1 … a_{k-1}].
//! ```
//!
//! Writing `G⁻¹ = T Tᵀ` (Cholesky factor, or the truncated eigenbasis for the
//! pseudo-inverse) and `a = T c`, `M(k)` is similar to `(I - Π) K` with
//! `K = Tᵀ H T` and `Π = Ã B⁻¹ Ãᵀ`, `Ã = Tᵀ A`, the orthogonal projector onto
//! span(Ã). Its admissible eigenvectors (those with `Aᵀ a = 0`) are exactly the
//! eigenvectors of the symmetric `(I - Π) K (I - Π)` inside range(I - Π). We
//! solve that symmetric problem, pushing span(Ã) out of the way with a shift,
//! so no non-symmetric eigensolver is needed.

use nalgebra::{DMatrix, DVector};

use super::pca::principal_axes;
use super::{
    cumulative_variance_dim, Method, ProjectionModel, SingularStrategy, ORTHONORMALITY_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    canonical_sign, gen_sym_eig, is_positive_definite, orthonormality_error, pseudo_inverse,
    svd, sym_eig, symmetrize, DEFAULT_RANK_TOL,
};
use crate::matrix::DataMatrix;
use crate::neighbors::NeighborGraph;

/// Which end of the spectrum each projection vector comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenOrder {
    /// Locality preserving directions.
    Smallest,
    /// Maximal-variance directions (the PCA limit).
    Largest,
}

/// `(X L Xᵀ, X D Xᵀ)` for a graph built on `x`.
pub fn locality_matrices(
    x: &DataMatrix,
    graph: &NeighborGraph,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    Ok((graph.x_l_xt(x)?, graph.x_d_xt(x)?))
}

/// Fits `l` orthonormal locality preserving projections of the normalized
/// data `x`.
pub fn fit_olpp(
    x: &DataMatrix,
    l: usize,
    graph: &NeighborGraph,
    strategy: SingularStrategy,
) -> Result<ProjectionModel> {
    let (h, g) = locality_matrices(x, graph)?;
    let (w, spectrum, resolved) = match strategy {
        SingularStrategy::PcaProject { variance_kept } => {
            strategy.validate()?;
            let w_pca = pca_preprojection(x, variance_kept)?;
            let h_hat = symmetrize(&(w_pca.transpose() * &h * &w_pca));
            let g_hat = symmetrize(&(w_pca.transpose() * &g * &w_pca));
            let (w_olpi, spectrum, _) = olpp_from_matrices(
                &h_hat,
                &g_hat,
                l,
                SingularStrategy::NoRemedy,
                EigenOrder::Smallest,
            )?;
            (&w_pca * w_olpi, spectrum, strategy)
        }
        _ => olpp_from_matrices(&h, &g, l, strategy, EigenOrder::Smallest)?,
    };
    finish(Method::Olpp, w, spectrum, Some(resolved))
}

/// OLPP through the SVD of the data: with `X = U Σ Vᵀ` and `b = Σ Uᵀ a`, each
/// step solves `Vᵀ L V b = λ Vᵀ D V b` and maps back with `a = U Σ⁻¹ b`.
pub fn fit_olpp_svd_variant(
    x: &DataMatrix,
    l: usize,
    graph: &NeighborGraph,
) -> Result<ProjectionModel> {
    let s = svd(x.as_matrix(), DEFAULT_RANK_TOL)?;
    if l == 0 || l > s.rank() {
        return Err(Error::Singular(format!(
            "requested dimension {l} exceeds the numerical rank {} of X",
            s.rank()
        )));
    }
    // rows of V play the role of samples in the reduced problem
    let v_samples = DataMatrix::new(s.v.transpose())?;
    let h_b = graph.x_l_xt(&v_samples)?;
    let g_b = graph.x_d_xt(&v_samples)?;
    let (t_b, k) = cholesky_whitening(&h_b, &g_b)?;
    let inv_sigma = DMatrix::from_diagonal(&s.sigma.map(|v| 1.0 / v));
    let map = &s.u * inv_sigma * t_b;
    let (w, spectrum) = orthogonal_iteration(&map, &k, l, EigenOrder::Smallest)?;
    finish(Method::Olpp, w, spectrum, Some(SingularStrategy::PseudoInverse))
}

/// Locality preserving projections: the `l` smallest generalized eigenvectors
/// of `X L Xᵀ a = λ X D Xᵀ a`, unit-normalized, with no orthogonalization.
pub fn fit_lpp(
    x: &DataMatrix,
    l: usize,
    graph: &NeighborGraph,
    strategy: SingularStrategy,
) -> Result<ProjectionModel> {
    strategy.validate()?;
    let (h, g) = locality_matrices(x, graph)?;
    let (w, spectrum) = match strategy {
        SingularStrategy::PseudoInverse => {
            let (map, k) = whitening(&h, &g, strategy)?.into_parts();
            check_rank(l, k.nrows())?;
            let eig = sym_eig(&k)?;
            let mut w = DMatrix::zeros(x.n_vars(), l);
            for c in 0..l {
                let mut a = &map * eig.vectors.column(c);
                a /= a.norm();
                canonical_sign(&mut a);
                w.set_column(c, &a);
            }
            (w, eig.values.as_slice()[..l].to_vec())
        }
        SingularStrategy::PcaProject { variance_kept } => {
            let w_pca = pca_preprojection(x, variance_kept)?;
            let h_hat = symmetrize(&(w_pca.transpose() * &h * &w_pca));
            let g_hat = symmetrize(&(w_pca.transpose() * &g * &w_pca));
            let (w_hat, spectrum) = lpp_generalized(&h_hat, &g_hat, l)?;
            let mut w = &w_pca * w_hat;
            for mut col in w.column_iter_mut() {
                col /= col.norm();
            }
            (w, spectrum)
        }
        _ => {
            let g_fixed = remedied_metric(&g, strategy)?;
            lpp_generalized(&h, &g_fixed, l)?
        }
    };
    let mut resolved = strategy;
    if let SingularStrategy::ScaledRegularize { scale } = strategy {
        resolved = SingularStrategy::Regularize {
            beta: scaled_beta(&g, scale),
        };
    }
    Ok(ProjectionModel {
        method: Method::Lpp,
        w,
        strategy: Some(resolved),
        lag: 0,
        spectrum,
    })
}

fn lpp_generalized(h: &DMatrix<f64>, g: &DMatrix<f64>, l: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_rank(l, g.nrows())?;
    let eig = gen_sym_eig(h, g).map_err(|e| match e {
        Error::IndefiniteB => singular_error(),
        other => other,
    })?;
    Ok((
        eig.vectors.columns(0, l).into_owned(),
        eig.values.as_slice()[..l].to_vec(),
    ))
}

/// Orthogonal projections from precomputed `H = X L Xᵀ` and `G = X D Xᵀ`.
///
/// Returns the basis, the eigenvalue attached to each vector, and the
/// strategy with any relative regularization resolved to an absolute `β`.
/// `PcaProject` needs the data and is handled by [`fit_olpp`].
pub fn olpp_from_matrices(
    h: &DMatrix<f64>,
    g: &DMatrix<f64>,
    l: usize,
    strategy: SingularStrategy,
    order: EigenOrder,
) -> Result<(DMatrix<f64>, Vec<f64>, SingularStrategy)> {
    strategy.validate()?;
    if h.shape() != g.shape() || h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: g.nrows(),
            found: h.nrows(),
        });
    }
    let resolved = match strategy {
        SingularStrategy::ScaledRegularize { scale } => SingularStrategy::Regularize {
            beta: scaled_beta(g, scale),
        },
        SingularStrategy::PcaProject { .. } => {
            return Err(Error::InvalidParameter(
                "PCA pre-projection needs the data matrix; use fit_olpp".into(),
            ))
        }
        other => other,
    };
    let (map, k) = whitening(h, g, resolved)?.into_parts();
    let (w, spectrum) = orthogonal_iteration(&map, &k, l, order)?;
    Ok((w, spectrum, resolved))
}

/// `G⁻¹ = T Tᵀ` together with `K = Tᵀ H T`.
struct Whitening {
    map: DMatrix<f64>,
    reduced: DMatrix<f64>,
}

impl Whitening {
    fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.map, self.reduced)
    }
}

fn whitening(h: &DMatrix<f64>, g: &DMatrix<f64>, strategy: SingularStrategy) -> Result<Whitening> {
    match strategy {
        SingularStrategy::PseudoInverse => {
            // symmetric PSD, so the SVD G = P Σ Pᵀ gives G† = P Σ⁻¹ Pᵀ
            let s = svd(&symmetrize(g), DEFAULT_RANK_TOL)?;
            if s.rank() == 0 {
                return Err(singular_error());
            }
            let scale = DMatrix::from_diagonal(&s.sigma.map(|v| 1.0 / v.sqrt()));
            let map = &s.u * scale;
            let reduced = symmetrize(&(map.transpose() * h * &map));
            Ok(Whitening { map, reduced })
        }
        _ => {
            let g_fixed = remedied_metric(g, strategy)?;
            let (map, reduced) = cholesky_whitening(h, &g_fixed)?;
            Ok(Whitening { map, reduced })
        }
    }
}

/// `G + βI` for the regularizing strategies, `G` itself otherwise; errors when
/// the result is not positive definite.
fn remedied_metric(g: &DMatrix<f64>, strategy: SingularStrategy) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let fixed = match strategy {
        SingularStrategy::Regularize { beta } => g + DMatrix::identity(n, n) * beta,
        SingularStrategy::ScaledRegularize { scale } => {
            g + DMatrix::identity(n, n) * scaled_beta(g, scale)
        }
        _ => g.clone(),
    };
    if !is_positive_definite(&fixed) {
        return Err(singular_error());
    }
    Ok(symmetrize(&fixed))
}

fn scaled_beta(g: &DMatrix<f64>, scale: f64) -> f64 {
    scale * g.trace() / g.nrows() as f64
}

/// Cholesky `G = R Rᵀ`, `T = R⁻ᵀ`, `K = R⁻¹ H R⁻ᵀ`.
fn cholesky_whitening(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let chol = nalgebra::Cholesky::new(symmetrize(g)).ok_or_else(singular_error)?;
    let r = chol.l();
    let n = g.nrows();
    let r_inv = r
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(singular_error)?;
    let map = r_inv.transpose();
    let reduced = symmetrize(&(&r_inv * h * &map));
    Ok((map, reduced))
}

/// Sequential orthogonal eigenvectors in the whitened coordinates.
fn orthogonal_iteration(
    map: &DMatrix<f64>,
    k: &DMatrix<f64>,
    l: usize,
    order: EigenOrder,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let r = k.nrows();
    check_rank(l, r)?;
    let m = map.nrows();
    // larger than every eigenvalue of K, so span(Ã) sorts past the admissible set
    let shift = 2.0 * k.norm() + 1.0;
    let signed_shift = match order {
        EigenOrder::Smallest => shift,
        EigenOrder::Largest => -shift,
    };

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(l);
    let mut spectrum = Vec::with_capacity(l);
    for step in 0..l {
        let problem = if step == 0 {
            k.clone()
        } else {
            let a = DMatrix::from_columns(&basis);
            let a_tilde = map.transpose() * &a;
            let b = a_tilde.transpose() * &a_tilde;
            let b_inv = pseudo_inverse(&b, DEFAULT_RANK_TOL)?;
            let proj = &a_tilde * b_inv * a_tilde.transpose();
            let complement = DMatrix::identity(r, r) - &proj;
            symmetrize(&(&complement * k * &complement + proj * signed_shift))
        };
        let eig = sym_eig(&problem)?;
        let pick = match order {
            EigenOrder::Smallest => 0,
            EigenOrder::Largest => r - 1,
        };
        let c = eig.vectors.column(pick);
        let mut a = map * c;
        // re-orthogonalize twice against the accepted vectors
        for _ in 0..2 {
            for prev in &basis {
                let overlap = prev.dot(&a);
                a.axpy(-overlap, prev, 1.0);
            }
        }
        let norm = a.norm();
        if !(norm > 1e-300) || !norm.is_finite() {
            return Err(Error::Singular(format!(
                "projection vector {} collapsed during orthogonalization",
                step + 1
            )));
        }
        a /= norm;
        canonical_sign(&mut a);
        spectrum.push(eig.values[pick]);
        basis.push(a);
    }
    let w = if basis.is_empty() {
        DMatrix::zeros(m, 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    Ok((w, spectrum))
}

fn pca_preprojection(x: &DataMatrix, variance_kept: f64) -> Result<DMatrix<f64>> {
    let (values, vectors) = principal_axes(x)?;
    let largest = values.first().copied().unwrap_or(0.0);
    let numerical_rank = values
        .iter()
        .filter(|&&v| v > DEFAULT_RANK_TOL * largest)
        .count();
    let p = cumulative_variance_dim(&values, variance_kept)?.min(numerical_rank);
    Ok(vectors.columns(0, p.max(1)).into_owned())
}

fn check_rank(l: usize, rank: usize) -> Result<()> {
    if l == 0 || l > rank {
        return Err(Error::Singular(format!(
            "requested dimension {l} exceeds the numerical rank {rank} of XDXᵀ"
        )));
    }
    Ok(())
}

fn singular_error() -> Error {
    Error::Singular("singular XDXᵀ: choose a remedy".into())
}

fn finish(
    method: Method,
    w: DMatrix<f64>,
    spectrum: Vec<f64>,
    strategy: Option<SingularStrategy>,
) -> Result<ProjectionModel> {
    let drift = orthonormality_error(&w);
    if drift > ORTHONORMALITY_TOL {
        return Err(Error::OrthonormalityViolated(drift));
    }
    Ok(ProjectionModel {
        method,
        w,
        strategy,
        lag: 0,
        spectrum,
    })
}
