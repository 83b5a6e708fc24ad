//! Data-driven process monitoring built on orthogonal locality preserving
//! projections (OLPP) whose dimension comes from a maximum-likelihood
//! intrinsic-dimension estimate.
//!
//! The off-line phase normalizes normal operating data, estimates the
//! intrinsic dimension, builds a k-nearest-neighbor heat-kernel graph, fits a
//! projection and calibrates KDE thresholds for the T² and SPE statistics.
//! The on-line phase projects new samples and raises alarms when either
//! statistic exceeds its threshold.
//!
//! Samples are stored column-wise: a [`DataMatrix`] is `m` variables by `N`
//! samples.

pub mod datagen;
pub mod error;
pub mod id;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod monitoring;
pub mod neighbors;
pub mod projections;

pub use error::{Error, Result};
pub use matrix::DataMatrix;
