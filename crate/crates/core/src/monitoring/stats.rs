use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative slack below zero tolerated in `‖x‖² − ‖Wᵀx‖²` before the basis
/// is declared non-orthonormal.
pub const SPE_CLAMP_TOL: f64 = 1e-9;

/// `T² = Σ yᵢ² / γᵢ`.
pub fn t2(y: &DVector<f64>, lambda: &[f64]) -> Result<f64> {
    if y.len() != lambda.len() {
        return Err(Error::DimensionMismatch {
            expected: lambda.len(),
            found: y.len(),
        });
    }
    let mut acc = 0.0;
    for (yi, &g) in y.iter().zip(lambda) {
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "T² eigenvalue {g} must be positive"
            )));
        }
        acc += yi * yi / g;
    }
    Ok(acc)
}

/// `SPE = ‖x‖² − ‖Wᵀx‖²` for `W` with orthonormal columns. Small negative
/// rounding is clamped to 0; larger deficits mean `W` is not orthonormal.
pub fn spe(x: &DVector<f64>, w: &DMatrix<f64>) -> Result<f64> {
    if x.len() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: x.len(),
        });
    }
    let xx = x.norm_squared();
    let yy = w.tr_mul(x).norm_squared();
    let value = xx - yy;
    if value >= 0.0 {
        return Ok(value);
    }
    let deficit = -value;
    if deficit > SPE_CLAMP_TOL * xx.max(1.0) {
        return Err(Error::OrthonormalityViolated(deficit));
    }
    Ok(0.0)
}

/// `‖x − WWᵀx‖²`, the reconstruction form of the same statistic.
pub fn spe_reconstruction(x: &DVector<f64>, w: &DMatrix<f64>) -> Result<f64> {
    if x.len() != w.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.nrows(),
            found: x.len(),
        });
    }
    let x_hat = w * w.tr_mul(x);
    Ok((x - x_hat).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormal_basis;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn t2_examples() {
        assert_eq!(t2(&DVector::zeros(2), &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(t2(&DVector::from_vec(vec![3.0, 4.0]), &[1.0, 1.0]).unwrap(), 25.0);
        assert!(t2(&DVector::from_vec(vec![1.0]), &[0.0]).is_err());
        assert!(t2(&DVector::from_vec(vec![1.0, 2.0]), &[1.0]).is_err());
    }

    #[test]
    fn t2_matches_elementwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let y = DVector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
            let lambda: Vec<f64> = (0..4).map(|_| rng.random_range(0.1..5.0)).collect();
            let mut oracle = 0.0;
            for i in 0..4 {
                oracle += y[i] * y[i] / lambda[i];
            }
            assert!((t2(&y, &lambda).unwrap() - oracle).abs() <= 1e-12 * oracle.max(1.0));
        }
    }

    #[test]
    fn spe_examples() {
        let w = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert_eq!(spe(&DVector::from_vec(vec![0.0, 2.5, 0.0]), &w).unwrap(), 0.0);
        let x = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        assert_eq!(spe(&x, &DMatrix::zeros(3, 0)).unwrap(), 9.0);
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let w = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(matches!(
            spe(&DVector::from_vec(vec![1.0, 0.0]), &w),
            Err(Error::OrthonormalityViolated(_))
        ));
    }

    proptest! {
        #[test]
        fn identity_between_forms(seed in 0u64..10_000, m in 2usize..8, l_frac in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = ((m as f64 * l_frac) as usize).clamp(1, m);
            let raw = DMatrix::from_fn(m, l, |_, _| rng.random_range(-1.0..1.0));
            let w = orthonormal_basis(&raw).unwrap();
            let x = DVector::from_fn(m, |_, _| rng.random_range(-5.0..5.0));
            let a = spe(&x, &w).unwrap();
            let b = spe_reconstruction(&x, &w).unwrap();
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
