//! Maximum-likelihood intrinsic dimension from nearest-neighbor distances.
//!
//! For a sample with ascending neighbor distances `F_1 ≤ … ≤ F_k` the local
//! estimate is
//!
//! ```text
//! l̂_k(x) = [ (1/(k-1)) Σ_{j=1}^{k-1} ln(F_k / F_j) ]⁻¹
//! ```
//!
//! which is averaged over all samples for each `k`, and then over
//! `k = k1..=k2` to obtain the pooled estimate.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::neighbors::knn_indices;

pub const DEFAULT_K1: usize = 10;
pub const DEFAULT_K2: usize = 20;

/// Pointwise estimate from the first `k` ascending neighbor distances.
pub fn mle_id_point(sorted_distances: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k = {k} must be at least 2")));
    }
    if sorted_distances.len() < k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: sorted_distances.len(),
        });
    }
    let f = &sorted_distances[..k];
    if f.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter(
            "neighbor distances must be non-decreasing".into(),
        ));
    }
    if f[0] <= 0.0 {
        return Err(Error::DegenerateNeighborhood);
    }
    let fk = f[k - 1];
    let sum: f64 = f[..k - 1].iter().map(|&fj| (fk / fj).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateNeighborhood);
    }
    Ok((k - 1) as f64 / sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdEstimate {
    /// Sample-averaged estimate for each `k` in `k1..=k2`.
    pub per_k: BTreeMap<usize, f64>,
    /// Mean of `per_k`.
    pub pooled: f64,
    /// `pooled` rounded half-up and clamped to `[1, m]`.
    pub rounded: usize,
    pub k1: usize,
    pub k2: usize,
    /// Samples dropped because of zero or tied neighbor distances.
    pub skipped: usize,
}

/// Pooled MLE of the intrinsic dimension over `k = k1..=k2`.
pub fn mle_id(x: &DataMatrix, k1: usize, k2: usize) -> Result<IdEstimate> {
    let n = x.n_samples();
    if k1 < 2 || k1 >= k2 || k2 + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= k1 < k2 <= N-1, got k1 = {k1}, k2 = {k2}, N = {n}"
        )));
    }
    let distinct = count_distinct(x);
    if distinct < k2 + 1 {
        return Err(Error::InvalidParameter(format!(
            "only {distinct} distinct samples, need at least {}",
            k2 + 1
        )));
    }

    let lists = knn_indices(x, k2)?;
    let local: Vec<Option<Vec<f64>>> = lists
        .par_iter()
        .map(|list| {
            let dists: Vec<f64> = list.iter().map(|nb| nb.distance).collect();
            (k1..=k2)
                .map(|k| mle_id_point(&dists, k))
                .collect::<Result<Vec<f64>>>()
                .ok()
        })
        .collect();

    let valid: Vec<&Vec<f64>> = local.iter().flatten().collect();
    let skipped = n - valid.len();
    if valid.is_empty() {
        return Err(Error::DegenerateNeighborhood);
    }
    if skipped > 0 {
        log::warn!("intrinsic dimension: skipped {skipped} samples with degenerate neighborhoods");
    }

    let mut per_k = BTreeMap::new();
    for (offset, k) in (k1..=k2).enumerate() {
        let mean = valid.iter().map(|v| v[offset]).sum::<f64>() / valid.len() as f64;
        per_k.insert(k, mean);
    }
    let pooled = per_k.values().sum::<f64>() / per_k.len() as f64;
    Ok(IdEstimate {
        per_k,
        pooled,
        rounded: round_dimension(pooled, x.n_vars()),
        k1,
        k2,
        skipped,
    })
}

/// Round half-up, clamped to `[1, ambient]`.
pub fn round_dimension(pooled: f64, ambient: usize) -> usize {
    let rounded = (pooled + 0.5).floor();
    if rounded < 1.0 {
        1
    } else {
        (rounded as usize).min(ambient.max(1))
    }
}

fn count_distinct(x: &DataMatrix) -> usize {
    let mut seen = HashSet::with_capacity(x.n_samples());
    for j in 0..x.n_samples() {
        let key: Vec<u64> = x
            .sample(j)
            .iter()
            .map(|v| if *v == 0.0 { 0 } else { v.to_bits() })
            .collect();
        seen.insert(key);
    }
    seen.len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k1: usize,
    pub k2: usize,
    pub stride: usize,
    pub pooled: f64,
    pub rounded: usize,
}

/// Re-estimates the dimension over a grid of `(k1, k2)` ranges and sample
/// strides (keeping every `j`-th sample).
pub fn id_stability_sweep(
    x: &DataMatrix,
    k1_values: &[usize],
    k2_values: &[usize],
    strides: &[usize],
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::new();
    for &stride in strides {
        let sub = x.subsample(stride)?;
        for &k1 in k1_values {
            for &k2 in k2_values {
                let est = mle_id(&sub, k1, k2)?;
                cells.push(SweepCell {
                    k1,
                    k2,
                    stride,
                    pooled: est.pooled,
                    rounded: est.rounded,
                });
            }
        }
    }
    Ok(cells)
}
