//! The three-variable nonlinear system driven by a single latent `t`:
//!
//! ```text
//! x₁ = t + ε₁,  x₂ = cos t + ε₂,  x₃ = t² + t + ε₃,   t ~ U[-1, 1]
//! ```
//!
//! with `εᵢ` uniform on `±noise_halfwidth`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FaultId, FaultSpec, Label, LabeledData};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericalConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub noise_halfwidth: f64,
}

impl Default for NumericalConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            seed: 0,
            noise_halfwidth: 0.05,
        }
    }
}

/// Returns the `3 × N` data matrix and the latent `t` of every sample.
pub fn gen_numerical(config: &NumericalConfig) -> Result<(DataMatrix, Vec<f64>)> {
    if config.n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    let h = config.noise_halfwidth;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise half-width {h} must be non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_samples;
    let mut values = DMatrix::zeros(3, n);
    let mut latent = Vec::with_capacity(n);
    for j in 0..n {
        let t: f64 = rng.random_range(-1.0..=1.0);
        let mut noise = [0.0; 3];
        for e in noise.iter_mut() {
            *e = rng.random_range(-h..=h);
        }
        values[(0, j)] = t + noise[0];
        values[(1, j)] = t.cos() + noise[1];
        values[(2, j)] = t * t + t + noise[2];
        latent.push(t);
    }
    Ok((DataMatrix::new(values)?, latent))
}

/// Adds the fault's step to its variable from `onset_index` onward and labels
/// the affected samples.
pub fn inject_fault_numerical(data: &DataMatrix, fault: &FaultSpec) -> Result<LabeledData> {
    let row = match fault.id {
        FaultId::F1 => 0,
        FaultId::F2 => 1,
        FaultId::F3 => 2,
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other:?} is not a numerical-system fault"
            )))
        }
    };
    if data.n_vars() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: data.n_vars(),
        });
    }
    let n = data.n_samples();
    if fault.onset_index >= n {
        return Err(Error::InvalidParameter(format!(
            "onset {} beyond series length {n}",
            fault.onset_index
        )));
    }
    let mut values = data.as_matrix().clone();
    for j in fault.onset_index..n {
        values[(row, j)] += fault.magnitude;
    }
    let labels: Vec<Label> = (0..n)
        .map(|j| if j >= fault.onset_index { fault.id.label() } else { 0 })
        .collect();
    Ok(LabeledData {
        data: DataMatrix::new(values)?,
        labels,
    })
}
