//! Synthetic benchmark generators: the three-variable nonlinear system with
//! additive step faults, and a closed-loop CSTR simulator with a feed
//! temperature step and a vessel volume ramp.

pub mod cstr;
pub mod numerical;
pub mod suite;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DataMatrix;

/// Per-sample ground truth: 0 for normal operation, the fault number otherwise.
pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultId {
    /// Step of +0.6 on x₁ (numerical system).
    F1,
    /// Step of +0.8 on x₂ (numerical system).
    F2,
    /// Step of +1.0 on x₃ (numerical system).
    F3,
    /// CSTR feed temperature raised by 1%.
    F4,
    /// CSTR vessel volume ramping down at 4/500 m³/min.
    F5,
}

impl FaultId {
    pub fn label(self) -> Label {
        match self {
            FaultId::F1 => 1,
            FaultId::F2 => 2,
            FaultId::F3 => 3,
            FaultId::F4 => 4,
            FaultId::F5 => 5,
        }
    }

    pub fn from_label(label: Label) -> Option<Self> {
        match label {
            1 => Some(FaultId::F1),
            2 => Some(FaultId::F2),
            3 => Some(FaultId::F3),
            4 => Some(FaultId::F4),
            5 => Some(FaultId::F5),
            _ => None,
        }
    }
}

impl std::str::FromStr for FaultId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches(['F', 'f']);
        digits
            .parse::<Label>()
            .ok()
            .and_then(FaultId::from_label)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fault '{s}'")))
    }
}

/// A fault with its onset (0-based sample index) and magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub id: FaultId,
    pub onset_index: usize,
    /// Additive step for F1–F3, relative feed-temperature increase for F4,
    /// volume slope in m³/min for F5.
    pub magnitude: f64,
}

impl FaultSpec {
    /// Magnitudes and onsets used in the reference experiments. CSTR onsets
    /// assume one sample per second (the fault starts at minute 101).
    pub fn standard(id: FaultId) -> Self {
        let (onset_index, magnitude) = match id {
            FaultId::F1 => (500, 0.6),
            FaultId::F2 => (500, 0.8),
            FaultId::F3 => (500, 1.0),
            FaultId::F4 => (100 * 60, 0.01),
            FaultId::F5 => (100 * 60, -4.0 / 500.0),
        };
        Self {
            id,
            onset_index,
            magnitude,
        }
    }
}

/// Data plus one label per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub data: DataMatrix,
    pub labels: Vec<Label>,
}

/// First-order exponential smoother applied per variable:
/// `y_t = retention · y_{t-1} + (1 - retention) · x_t`, seeded with `x_0`.
pub fn low_pass(data: &DataMatrix, retention: f64) -> Result<DataMatrix> {
    if !(0.0..1.0).contains(&retention) {
        return Err(Error::InvalidParameter(format!(
            "filter retention {retention} must lie in [0, 1)"
        )));
    }
    let mut out = data.as_matrix().clone();
    for i in 0..out.nrows() {
        for j in 1..out.ncols() {
            out[(i, j)] = retention * out[(i, j - 1)] + (1.0 - retention) * out[(i, j)];
        }
    }
    DataMatrix::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fault_parsing() {
        assert_eq!("F3".parse::<FaultId>().unwrap(), FaultId::F3);
        assert_eq!("4".parse::<FaultId>().unwrap(), FaultId::F4);
        assert!("F9".parse::<FaultId>().is_err());
    }

    #[test]
    fn low_pass_smooths_step() {
        let x = DataMatrix::from_row_slice(1, 4, &[0.0, 1.0, 1.0, 1.0]).unwrap();
        let y = low_pass(&x, 0.8).unwrap();
        let v = y.as_matrix();
        assert_eq!(v[(0, 0)], 0.0);
        assert!((v[(0, 1)] - 0.2).abs() < 1e-15);
        assert!((v[(0, 2)] - 0.36).abs() < 1e-15);
        assert!(low_pass(&x, 1.0).is_err());
        assert_eq!(low_pass(&x, 0.0).unwrap(), x);
    }
}
