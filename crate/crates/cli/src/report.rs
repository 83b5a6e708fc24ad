//! JSON documents written by the commands.

use std::collections::BTreeMap;

use serde::Serialize;

use olpp_core::id::{IdEstimate, SweepCell};
use olpp_core::monitoring::{MonitoringModel, Rates};
use olpp_core::neighbors::GraphConfig;
use olpp_core::projections::{Method, SingularStrategy};

#[derive(Debug, Serialize)]
pub struct PerStatistic<T> {
    pub t2: T,
    pub spe: Option<T>,
}

#[derive(Debug, Serialize)]
pub struct TrainingReport {
    pub method: Method,
    pub n_samples: usize,
    pub n_vars: usize,
    pub alpha: f64,
    pub dim: usize,
    pub lag: usize,
    pub id: Option<IdEstimate>,
    pub thresholds: PerStatistic<f64>,
    pub bandwidths: PerStatistic<f64>,
    pub coverage: PerStatistic<f64>,
    pub lambda: Vec<f64>,
    pub dropped_dims: usize,
    pub graph: Option<GraphConfig>,
    pub strategy: Option<SingularStrategy>,
}

impl TrainingReport {
    pub fn new(model: &MonitoringModel) -> Self {
        Self {
            method: model.projection.method,
            n_samples: model.training.n_samples,
            n_vars: model.n_vars(),
            alpha: model.alpha,
            dim: model.projection.dim(),
            lag: model.lag(),
            id: model.training.id.clone(),
            thresholds: PerStatistic {
                t2: model.j_th_t2,
                spe: model.j_th_spe,
            },
            bandwidths: PerStatistic {
                t2: model.kappa_t2,
                spe: model.kappa_spe,
            },
            coverage: PerStatistic {
                t2: model.training.t2_coverage,
                spe: model.training.spe_coverage,
            },
            lambda: model.lambda.clone(),
            dropped_dims: model.dropped_dims,
            graph: model.training.graph,
            strategy: model.projection.strategy,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct IdReport {
    pub n_samples: usize,
    pub n_vars: usize,
    pub estimate: IdEstimate,
    pub sweep: Option<Vec<SweepCell>>,
}

#[derive(Debug, Serialize)]
pub struct AlarmCounts {
    pub t2: usize,
    pub spe: usize,
    pub combined: usize,
}

#[derive(Debug, Serialize)]
pub struct DetectSummary {
    pub n_samples: usize,
    /// Samples used only to prime the DPCA window.
    pub warmup: usize,
    pub n_records: usize,
    pub alarms: AlarmCounts,
    pub thresholds: PerStatistic<f64>,
    /// Present when the test data carry labels.
    pub rates: Option<EvaluationReport>,
}

#[derive(Debug, Serialize)]
pub struct EvaluationReport {
    pub combined: Rates,
    pub t2: Rates,
    /// Absent when the model has no SPE limit.
    pub spe: Option<Rates>,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkRow {
    pub case: String,
    /// `FAR` for the normal case, `FDR` for fault cases.
    pub metric: &'static str,
    pub values: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkCell {
    pub case: String,
    pub method: Method,
    pub dim: usize,
    pub estimated_id: Option<f64>,
    pub rates: Rates,
    /// Rates over the normal (pre-onset) samples only.
    pub normal_part: Option<Rates>,
}

#[derive(Debug, Serialize)]
pub struct BenchmarkReport {
    pub suite: String,
    pub methods: Vec<Method>,
    pub rows: Vec<BenchmarkRow>,
    pub cells: Vec<BenchmarkCell>,
}
