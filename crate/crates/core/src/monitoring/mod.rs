//! Off-line model building and on-line fault detection.
//!
//! Training data are normalized, reduced by the chosen projection, and the
//! T² and SPE statistics of the training set are summarized by Gaussian KDEs
//! whose `alpha` quantiles become the control limits. A new sample is faulty
//! when either statistic exceeds its limit.

mod kde;
mod metrics;
mod stats;

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::Label;
use crate::error::{Error, Result};
use crate::id::{mle_id, IdEstimate, DEFAULT_K1, DEFAULT_K2};
use crate::io::{normalize_apply, normalize_fit, NormStats};
use crate::linalg::{orthonormal_basis, sym_eig};
use crate::matrix::DataMatrix;
use crate::neighbors::GraphConfig;
use crate::projections::{
    fit_dpca, fit_lpp, fit_olpp, fit_olpp_svd_variant, fit_pca, DimSpec, Method,
    ProjectionModel, SingularStrategy, ORTHONORMALITY_TOL,
};

pub use kde::{
    bandwidth_opt, kde_cdf, kde_pdf, kde_threshold, kde_threshold_with, sample_std,
    MAX_BISECTION_ITERS,
};
pub use metrics::{evaluate, rates_by, Rates};
pub use stats::{spe, spe_reconstruction, t2, SPE_CLAMP_TOL};

pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_LAG: usize = 2;
pub const MIN_TRAINING_SAMPLES: usize = 50;
/// Covariance eigenvalues below this fraction of the largest are left out of T².
pub const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorConfig {
    pub method: Method,
    pub graph: GraphConfig,
    pub k1: usize,
    pub k2: usize,
    pub alpha: f64,
    pub strategy: SingularStrategy,
    /// DPCA lag; ignored by the static methods.
    pub lag: usize,
    /// Fixed retained dimension; `None` uses the rounded MLE estimate.
    pub dim: Option<usize>,
    /// Solve OLPP through the SVD of the data instead of a remedied `X D Xᵀ`.
    pub svd_variant: bool,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            method: Method::Olpp,
            graph: GraphConfig::default(),
            k1: DEFAULT_K1,
            k2: DEFAULT_K2,
            alpha: DEFAULT_ALPHA,
            strategy: SingularStrategy::default(),
            lag: DEFAULT_LAG,
            dim: None,
            svd_variant: false,
        }
    }
}

impl MonitorConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }
}

/// What the training run measured, kept with the model for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_samples: usize,
    pub id: Option<IdEstimate>,
    pub graph: Option<GraphConfig>,
    /// Fraction of training samples at or below each limit.
    pub t2_coverage: f64,
    pub spe_coverage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringModel {
    pub projection: ProjectionModel,
    pub norm: NormStats,
    /// Retained eigenvalues of `cov(Y)`, descending.
    pub lambda: Vec<f64>,
    /// Matching eigenvectors (`l × lambda.len()`); T² is evaluated in this frame.
    pub t2_frame: DMatrix<f64>,
    /// Eigen-directions of `cov(Y)` dropped by the floor.
    pub dropped_dims: usize,
    /// Orthonormal basis of the projection subspace used for SPE.
    pub spe_basis: DMatrix<f64>,
    pub j_th_t2: f64,
    /// `None` when the projection spans the whole input space, so the
    /// residual is identically zero and SPE carries no information.
    pub j_th_spe: Option<f64>,
    pub alpha: f64,
    pub kappa_t2: f64,
    pub kappa_spe: Option<f64>,
    pub training: TrainingSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Faulty,
}

impl Verdict {
    pub fn is_faulty(self) -> bool {
        self == Verdict::Faulty
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Normal => "normal",
            Verdict::Faulty => "faulty",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub sample_index: usize,
    pub t2: f64,
    pub spe: f64,
    pub t2_alarm: bool,
    pub spe_alarm: bool,
    pub verdict: Verdict,
    /// Ground truth, when known (0 = normal).
    pub label: Option<Label>,
}

impl MonitoringModel {
    /// Number of raw process variables.
    pub fn n_vars(&self) -> usize {
        self.norm.dim()
    }

    pub fn lag(&self) -> usize {
        self.projection.lag
    }

    /// Length of the raw vector accepted by [`detect`]: `(lag + 1) · m`.
    pub fn raw_input_dim(&self) -> usize {
        (self.lag() + 1) * self.n_vars()
    }

    pub fn spe_active(&self) -> bool {
        self.j_th_spe.is_some()
    }

    /// Checks the invariants a deserialized model must satisfy.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.lambda.is_empty() || self.lambda.iter().any(|&g| !(g > 0.0 && g.is_finite())) {
            return bad("lambda must be non-empty and positive".into());
        }
        if self.lambda.windows(2).any(|w| w[1] > w[0]) {
            return bad("lambda must be non-increasing".into());
        }
        if !(self.j_th_t2 > 0.0 && self.j_th_t2.is_finite()) {
            return bad(format!("T² threshold {} not positive", self.j_th_t2));
        }
        if let Some(j) = self.j_th_spe {
            if !(j > 0.0 && j.is_finite()) {
                return bad(format!("SPE threshold {j} not positive"));
            }
        }
        let p = &self.projection;
        if p.input_dim() != self.raw_input_dim()
            || self.norm.std.len() != self.norm.dim()
            || self.t2_frame.nrows() != p.dim()
            || self.t2_frame.ncols() != self.lambda.len()
            || self.spe_basis.nrows() != p.input_dim()
        {
            return bad("inconsistent model dimensions".into());
        }
        Ok(())
    }
}

/// Builds a monitoring model from raw normal-operation training data.
pub fn fit_monitoring(x_train: &DataMatrix, config: &MonitorConfig) -> Result<MonitoringModel> {
    let n = x_train.n_samples();
    if n < MIN_TRAINING_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "training needs at least {MIN_TRAINING_SAMPLES} samples, got {n}"
        )));
    }
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence {} must lie in (0, 1)",
            config.alpha
        )));
    }
    config.strategy.validate()?;

    let norm = normalize_fit(x_train)?;
    let normalized = normalize_apply(x_train, &norm)?;
    let lag = if config.method == Method::Dpca { config.lag } else { 0 };
    let data = if lag > 0 {
        crate::projections::stack_lagged(&normalized, lag)?
    } else {
        normalized.clone()
    };

    let id = match config.dim {
        Some(_) => None,
        None => Some(mle_id(&data, config.k1, config.k2)?),
    };
    let l = match (config.dim, &id) {
        (Some(l), _) => l,
        (None, Some(est)) => est.rounded,
        (None, None) => unreachable!(),
    };
    if let Some(est) = &id {
        log::info!("estimated intrinsic dimension {:.3} -> {l}", est.pooled);
    }

    let mut graph_used = None;
    let projection = match config.method {
        Method::Olpp | Method::Lpp => {
            let graph = config.graph.build(&data)?;
            graph_used = Some(GraphConfig {
                k: graph.k(),
                q: Some(graph.q()),
            });
            match (config.method, config.svd_variant) {
                (Method::Olpp, false) => fit_olpp(&data, l, &graph, config.strategy)?,
                (Method::Olpp, true) => fit_olpp_svd_variant(&data, l, &graph)?,
                _ => fit_lpp(&data, l, &graph, config.strategy)?,
            }
        }
        Method::Pca => fit_pca(&data, DimSpec::Count(l))?,
        Method::Dpca => fit_dpca(&normalized, lag, DimSpec::Count(l))?,
    };

    let w = &projection.w;
    let y = w.tr_mul(data.as_matrix());
    let (lambda, t2_frame, dropped_dims) = covariance_frame(&y)?;
    if dropped_dims > 0 {
        log::warn!("{dropped_dims} projected directions have negligible variance; left out of T²");
    }

    let spe_basis = if projection.method.is_orthonormal() {
        w.clone()
    } else {
        orthonormal_basis(w)?
    };
    let spe_active = spe_basis.ncols() < projection.input_dim();

    let z = t2_frame.tr_mul(&y);
    let t2_series: Vec<f64> = (0..z.ncols())
        .map(|j| t2(&z.column(j).into_owned(), &lambda))
        .collect::<Result<_>>()?;
    let kappa_t2 = bandwidth_opt(&t2_series)?;
    let j_th_t2 = kde_threshold_with(&t2_series, kappa_t2, config.alpha)?;
    let t2_coverage = coverage(&t2_series, j_th_t2);

    let (kappa_spe, j_th_spe, spe_coverage) = if spe_active {
        let series: Vec<f64> = (0..data.n_samples())
            .map(|j| spe(&data.sample_owned(j), &spe_basis))
            .collect::<Result<_>>()?;
        let kappa = bandwidth_opt(&series)?;
        let j = kde_threshold_with(&series, kappa, config.alpha)?;
        (Some(kappa), Some(j), Some(coverage(&series, j)))
    } else {
        log::info!("retained dimension equals input dimension; SPE disabled");
        (None, None, None)
    };

    let model = MonitoringModel {
        projection,
        norm,
        lambda,
        t2_frame,
        dropped_dims,
        spe_basis,
        j_th_t2,
        j_th_spe,
        alpha: config.alpha,
        kappa_t2,
        kappa_spe,
        training: TrainingSummary {
            n_samples: n,
            id,
            graph: graph_used,
            t2_coverage,
            spe_coverage,
        },
    };
    model.validate()?;
    if model.projection.method.is_orthonormal()
        && model.projection.orthonormality_error() > ORTHONORMALITY_TOL
    {
        return Err(Error::OrthonormalityViolated(model.projection.orthonormality_error()));
    }
    Ok(model)
}

fn coverage(series: &[f64], threshold: f64) -> f64 {
    series.iter().filter(|&&v| v <= threshold).count() as f64 / series.len() as f64
}

/// Eigen-decomposition of the sample covariance of the projected scores:
/// eigenvalues descending above the floor, their eigenvectors, and the
/// number of directions dropped.
fn covariance_frame(y: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, usize)> {
    let (l, n) = (y.nrows(), y.ncols());
    let mean = y.column_mean();
    let mut centered = y.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let cov = &centered * centered.transpose() / (n - 1) as f64;
    let eig = sym_eig(&cov)?;
    let top = eig.values[l - 1];
    if !(top > 0.0) {
        return Err(Error::DegenerateDistribution);
    }
    let kept: Vec<usize> = (0..l).rev().filter(|&i| eig.values[i] >= LAMBDA_FLOOR * top).collect();
    let lambda = kept.iter().map(|&i| eig.values[i]).collect();
    let frame = DMatrix::from_fn(l, kept.len(), |r, c| eig.vectors[(r, kept[c])]);
    Ok((lambda, frame, l - kept.len()))
}

/// Statistics and verdict for one raw sample. DPCA models take the
/// lag-stacked raw vector `[x_t; x_{t-1}; …; x_{t-lag}]`.
pub fn detect(model: &MonitoringModel, x_raw: &[f64]) -> Result<DetectionRecord> {
    detect_labeled(model, x_raw, 0, None)
}

fn detect_labeled(
    model: &MonitoringModel,
    x_raw: &[f64],
    sample_index: usize,
    label: Option<Label>,
) -> Result<DetectionRecord> {
    if x_raw.len() != model.raw_input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.raw_input_dim(),
            found: x_raw.len(),
        });
    }
    let m = model.n_vars();
    let x = DVector::from_fn(x_raw.len(), |i, _| {
        let v = i % m;
        (x_raw[i] - model.norm.mean[v]) / model.norm.std[v]
    });
    let y = model.projection.w.tr_mul(&x);
    let t2_value = t2(&model.t2_frame.tr_mul(&y), &model.lambda)?;
    let spe_value = spe(&x, &model.spe_basis)?;
    Ok(record(model, sample_index, t2_value, spe_value, label))
}

fn record(
    model: &MonitoringModel,
    sample_index: usize,
    t2: f64,
    spe: f64,
    label: Option<Label>,
) -> DetectionRecord {
    let t2_alarm = t2 > model.j_th_t2;
    let spe_alarm = model.j_th_spe.is_some_and(|j| spe > j);
    DetectionRecord {
        sample_index,
        t2,
        spe,
        t2_alarm,
        spe_alarm,
        verdict: if t2_alarm || spe_alarm {
            Verdict::Faulty
        } else {
            Verdict::Normal
        },
        label,
    }
}

/// Runs [`detect`] over every sample of `data` (`m × N`, raw). For DPCA the
/// first `lag` samples only prime the window and produce no record.
pub fn detect_series(
    model: &MonitoringModel,
    data: &DataMatrix,
    labels: Option<&[Label]>,
) -> Result<Vec<DetectionRecord>> {
    if data.n_vars() != model.n_vars() {
        return Err(Error::DimensionMismatch {
            expected: model.n_vars(),
            found: data.n_vars(),
        });
    }
    if let Some(labels) = labels {
        if labels.len() != data.n_samples() {
            return Err(Error::DimensionMismatch {
                expected: data.n_samples(),
                found: labels.len(),
            });
        }
    }
    let lag = model.lag();
    let values = data.as_matrix();
    (lag..data.n_samples())
        .into_par_iter()
        .map(|t| {
            let stacked: Vec<f64> = (0..=lag)
                .flat_map(|b| values.column(t - b).iter().copied().collect::<Vec<_>>())
                .collect();
            detect_labeled(model, &stacked, t, labels.map(|l| l[t]))
        })
        .collect()
}

/// Sample-by-sample monitor keeping the sliding window DPCA needs.
#[derive(Debug, Clone)]
pub struct OnlineMonitor<'a> {
    model: &'a MonitoringModel,
    window: VecDeque<Vec<f64>>,
    next_index: usize,
}

impl<'a> OnlineMonitor<'a> {
    pub fn new(model: &'a MonitoringModel) -> Self {
        Self {
            model,
            window: VecDeque::with_capacity(model.lag() + 1),
            next_index: 0,
        }
    }

    /// Feeds one raw sample; returns `None` while the window is priming.
    pub fn push(&mut self, x_raw: &[f64], label: Option<Label>) -> Result<Option<DetectionRecord>> {
        if x_raw.len() != self.model.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.model.n_vars(),
                found: x_raw.len(),
            });
        }
        let index = self.next_index;
        self.next_index += 1;
        self.window.push_front(x_raw.to_vec());
        self.window.truncate(self.model.lag() + 1);
        if self.window.len() <= self.model.lag() {
            return Ok(None);
        }
        let stacked: Vec<f64> = self.window.iter().flatten().copied().collect();
        detect_labeled(self.model, &stacked, index, label).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn plane_data(seed: u64, n: usize) -> DataMatrix {
        noisy_plane(seed, n, 0.02)
    }

    /// 2-D plane in 5 dimensions with Gaussian noise of the given scale.
    fn noisy_plane(seed: u64, n: usize, noise_scale: f64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let z = DMatrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0));
        let noise = DMatrix::from_fn(5, n, |_, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            noise_scale * e
        });
        DataMatrix::new(&basis * z + noise).unwrap()
    }

    fn fixed(method: Method, dim: usize) -> MonitorConfig {
        MonitorConfig {
            method,
            dim: Some(dim),
            ..MonitorConfig::default()
        }
    }

    #[test]
    fn self_coverage_near_alpha() {
        let x = plane_data(81, 1000);
        for method in [Method::Olpp, Method::Pca, Method::Lpp] {
            let model = fit_monitoring(&x, &fixed(method, 2)).unwrap();
            let t2c = model.training.t2_coverage;
            let spec = model.training.spe_coverage.unwrap();
            assert!((t2c - 0.99).abs() <= 0.02, "{method}: T² coverage {t2c}");
            assert!((spec - 0.99).abs() <= 0.02, "{method}: SPE coverage {spec}");
        }
    }

    #[test]
    fn mle_dimension_used_by_default() {
        let x = noisy_plane(82, 1000, 1e-3);
        let model = fit_monitoring(&x, &MonitorConfig::default()).unwrap();
        let id = model.training.id.as_ref().unwrap();
        assert_eq!(model.projection.dim(), id.rounded);
        assert_eq!(id.rounded, 2);
    }

    #[test]
    fn training_mean_is_normal() {
        let x = plane_data(83, 300);
        let model = fit_monitoring(&x, &fixed(Method::Olpp, 2)).unwrap();
        let rec = detect(&model, &model.norm.mean.clone()).unwrap();
        assert_eq!(rec.t2, 0.0);
        assert_eq!(rec.spe, 0.0);
        assert_eq!(rec.verdict, Verdict::Normal);
    }

    #[test]
    fn gross_outlier_is_faulty() {
        let x = plane_data(84, 300);
        let model = fit_monitoring(&x, &fixed(Method::Olpp, 2)).unwrap();
        let raw: Vec<f64> = (0..5).map(|i| model.norm.mean[i] + 100.0 * model.norm.std[i]).collect();
        assert_eq!(detect(&model, &raw).unwrap().verdict, Verdict::Faulty);
    }

    #[test]
    fn limits_are_not_alarming() {
        let x = plane_data(85, 300);
        let model = fit_monitoring(&x, &fixed(Method::Pca, 2)).unwrap();
        let rec = record(&model, 0, model.j_th_t2, model.j_th_spe.unwrap(), None);
        assert_eq!(rec.verdict, Verdict::Normal);
        let rec = record(&model, 0, model.j_th_t2 * (1.0 + 1e-12), 0.0, None);
        assert_eq!(rec.verdict, Verdict::Faulty);
    }

    #[test]
    fn verdict_is_or_of_alarms() {
        let x = plane_data(86, 400);
        let model = fit_monitoring(&x, &fixed(Method::Olpp, 2)).unwrap();
        let test = plane_data(87, 400);
        for rec in detect_series(&model, &test, None).unwrap() {
            let expected = rec.t2 > model.j_th_t2 || rec.spe > model.j_th_spe.unwrap();
            assert_eq!(rec.verdict.is_faulty(), expected);
        }
    }

    #[test]
    fn full_dimension_disables_spe() {
        let x = plane_data(88, 300);
        let model = fit_monitoring(&x, &fixed(Method::Pca, 5)).unwrap();
        assert!(!model.spe_active());
        assert!(model.kappa_spe.is_none());
        let rec = detect(&model, &[9.0; 5]).unwrap();
        assert!(!rec.spe_alarm);
    }

    #[test]
    fn t2_invariant_under_score_permutation() {
        // reordering the projection vectors permutes Y's rows; Λ's frame follows
        let x = plane_data(89, 500);
        let model = fit_monitoring(&x, &fixed(Method::Pca, 3)).unwrap();
        let mut permuted = model.clone();
        let w = &model.projection.w;
        permuted.projection.w = DMatrix::from_columns(&[w.column(2), w.column(0), w.column(1)]);
        let xn = normalize_apply(&x, &model.norm).unwrap();
        let y = permuted.projection.w.tr_mul(xn.as_matrix());
        let (lambda, frame, _) = covariance_frame(&y).unwrap();
        permuted.lambda = lambda;
        permuted.t2_frame = frame;
        let test = plane_data(90, 50);
        let a = detect_series(&model, &test, None).unwrap();
        let b = detect_series(&permuted, &test, None).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert!((ra.t2 - rb.t2).abs() <= 1e-9 * ra.t2.max(1.0));
        }
    }

    #[test]
    fn dpca_window_priming() {
        let x = plane_data(91, 400);
        let cfg = MonitorConfig {
            method: Method::Dpca,
            lag: 2,
            dim: Some(4),
            ..MonitorConfig::default()
        };
        let model = fit_monitoring(&x, &cfg).unwrap();
        assert_eq!(model.raw_input_dim(), 15);
        let test = plane_data(92, 30);
        let series = detect_series(&model, &test, None).unwrap();
        assert_eq!(series.len(), 28);
        assert_eq!(series[0].sample_index, 2);

        let mut online = OnlineMonitor::new(&model);
        let mut streamed = Vec::new();
        for j in 0..test.n_samples() {
            let s: Vec<f64> = test.sample(j).iter().copied().collect();
            if let Some(rec) = online.push(&s, None).unwrap() {
                streamed.push(rec);
            }
        }
        assert_eq!(streamed, series);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = plane_data(93, 40);
        assert!(fit_monitoring(&x, &fixed(Method::Pca, 2)).is_err());
        let x = plane_data(94, 100);
        let cfg = MonitorConfig {
            alpha: 1.0,
            ..fixed(Method::Pca, 2)
        };
        assert!(fit_monitoring(&x, &cfg).is_err());
        let model = fit_monitoring(&x, &fixed(Method::Pca, 2)).unwrap();
        assert!(matches!(detect(&model, &[0.0; 4]), Err(Error::DimensionMismatch { .. })));
    }
}
