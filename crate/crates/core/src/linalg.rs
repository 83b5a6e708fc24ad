//! Dense linear-algebra kernels: truncated SVD, Moore–Penrose pseudo-inverse,
//! and symmetric / generalized symmetric eigendecompositions.
//!
//! The factorizations themselves are delegated to `nalgebra`; this module adds
//! the rank truncation, ordering and sign conventions the rest of the crate
//! relies on. Eigenvectors are normalized to unit Euclidean length and signed
//! so that their largest-magnitude entry is positive (first such entry on
//! ties), which makes every result reproducible.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::matrix::check_finite;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Relative floor under which the smallest eigenvalue of `B` is treated as
/// non-positive.
const PD_TOL: f64 = 1e-12;

/// Thin SVD truncated to numerical rank: `A ≈ U · diag(sigma) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// `m × r` with orthonormal columns.
    pub u: DMatrix<f64>,
    /// `r` positive singular values, non-increasing.
    pub sigma: DVector<f64>,
    /// `n × r` with orthonormal columns.
    pub v: DMatrix<f64>,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: DVector<f64>,
    /// Column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Singular value decomposition truncated at `rank_tol · σ_max`.
pub fn svd(a: &DMatrix<f64>, rank_tol: f64) -> Result<SvdResult> {
    check_finite(a)?;
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidParameter("rank_tol must be positive".into()));
    }
    let decomposition = SVD::new(a.clone(), true, true);
    let u_full = decomposition.u.expect("requested U");
    let vt_full = decomposition.v_t.expect("requested Vᵀ");
    let values = decomposition.singular_values;

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let largest = order.first().map(|&i| values[i]).unwrap_or(0.0);
    let cutoff = rank_tol * largest;
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| values[i] > cutoff && values[i] > 0.0)
        .collect();

    let r = kept.len();
    let mut u = DMatrix::zeros(a.nrows(), r);
    let mut v = DMatrix::zeros(a.ncols(), r);
    let mut sigma = DVector::zeros(r);
    for (dst, &src) in kept.iter().enumerate() {
        let mut ucol = u_full.column(src).into_owned();
        let mut vcol = vt_full.row(src).transpose();
        if sign_flip_needed(ucol.as_slice()) {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        u.set_column(dst, &ucol);
        v.set_column(dst, &vcol);
        sigma[dst] = values[src];
    }
    Ok(SvdResult { u, sigma, v })
}

/// `A† = V · diag(1/σ) · Uᵀ` over the retained singular triplets.
pub fn pseudo_inverse(a: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let s = svd(a, rank_tol)?;
    let inv_sigma = s.sigma.map(|x| 1.0 / x);
    Ok(&s.v * DMatrix::from_diagonal(&inv_sigma) * s.u.transpose())
}

/// Full eigendecomposition of a symmetric matrix. The input is symmetrized as
/// `(A + Aᵀ)/2` first.
pub fn sym_eig(a: &DMatrix<f64>) -> Result<EigResult> {
    check_finite(a)?;
    check_square(a)?;
    let decomposition = SymmetricEigen::new(symmetrize(a));
    Ok(sorted_pairs(decomposition.eigenvalues, decomposition.eigenvectors))
}

/// Solves `A v = λ B v` for symmetric `A` and symmetric positive-definite `B`
/// through the Cholesky reduction `L⁻¹ A L⁻ᵀ w = λ w`, `v = L⁻ᵀ w`.
///
/// Eigenvectors come back `B`-orthogonal and are then rescaled to unit
/// Euclidean norm.
pub fn gen_sym_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<EigResult> {
    check_finite(a)?;
    check_finite(b)?;
    check_square(a)?;
    check_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let b = symmetrize(b);
    if !is_positive_definite(&b) {
        return Err(Error::IndefiniteB);
    }
    let chol = Cholesky::new(b).ok_or(Error::IndefiniteB)?;
    let l = chol.l();
    let reduced = whiten_congruence(&l, &symmetrize(a));
    let inner = SymmetricEigen::new(symmetrize(&reduced));
    let lt = l.transpose();
    let vectors = lt
        .solve_upper_triangular(&inner.eigenvectors)
        .ok_or(Error::IndefiniteB)?;
    Ok(sorted_pairs(inner.eigenvalues, vectors))
}

/// `L⁻¹ A L⁻ᵀ` for lower-triangular `L`.
fn whiten_congruence(l: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let left = l.solve_lower_triangular(a).expect("non-singular Cholesky factor");
    let both = l
        .solve_lower_triangular(&left.transpose())
        .expect("non-singular Cholesky factor");
    both.transpose()
}

/// Smallest eigenvalue above `1e-12 ·` largest, and the largest positive.
pub fn is_positive_definite(b: &DMatrix<f64>) -> bool {
    let values = SymmetricEigen::new(symmetrize(b)).eigenvalues;
    let max = values.max();
    let min = values.min();
    max > 0.0 && min > PD_TOL * max
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest absolute deviation of `WᵀW` from the identity.
pub fn orthonormality_error(w: &DMatrix<f64>) -> f64 {
    let gram = w.transpose() * w;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Principal angles (radians, ascending) between the column spans of `a` and
/// `b`. Both inputs are orthonormalized first.
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let qa = orthonormal_basis(a)?;
    let qb = orthonormal_basis(b)?;
    let (qa, qb) = if qa.ncols() >= qb.ncols() { (qa, qb) } else { (qb, qa) };
    let cross = qa.transpose() * &qb;
    let cosines = SVD::new(cross.clone(), false, false).singular_values;
    // acos is ill-conditioned near 1; small angles come from the residual sines
    let residual = &qb - &qa * cross;
    let sines = SVD::new(residual, false, false).singular_values;
    let mut by_cos: Vec<f64> = cosines.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect();
    let mut by_sin: Vec<f64> = sines.iter().map(|s| s.clamp(-1.0, 1.0).asin()).collect();
    by_cos.sort_by(f64::total_cmp);
    by_sin.sort_by(f64::total_cmp);
    let angles = by_cos
        .iter()
        .zip(by_sin.iter())
        .map(|(&c, &s)| if c < std::f64::consts::FRAC_PI_4 { s } else { c })
        .collect();
    Ok(angles)
}

/// Orthonormal basis for the column span of `a` (numerical rank columns).
pub fn orthonormal_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(svd(a, DEFAULT_RANK_TOL)?.u)
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

fn sorted_pairs(values: DVector<f64>, vectors: DMatrix<f64>) -> EigResult {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut sorted_values = DVector::zeros(values.len());
    let mut sorted_vectors = DMatrix::zeros(vectors.nrows(), values.len());
    for (dst, &src) in order.iter().enumerate() {
        sorted_values[dst] = values[src];
        let mut col = vectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        if sign_flip_needed(col.as_slice()) {
            col.neg_mut();
        }
        sorted_vectors.set_column(dst, &col);
    }
    EigResult {
        values: sorted_values,
        vectors: sorted_vectors,
    }
}

/// True when the first largest-magnitude entry is negative.
pub(crate) fn sign_flip_needed(v: &[f64]) -> bool {
    let mut best = 0.0_f64;
    let mut best_value = 0.0_f64;
    for &x in v {
        if x.abs() > best {
            best = x.abs();
            best_value = x;
        }
    }
    best_value < 0.0
}

/// Flips `v` in place so its largest-magnitude entry is positive.
pub(crate) fn canonical_sign(v: &mut DVector<f64>) {
    if sign_flip_needed(v.as_slice()) {
        v.neg_mut();
    }
}
