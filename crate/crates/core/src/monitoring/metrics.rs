use serde::{Deserialize, Serialize};

use super::DetectionRecord;
use crate::error::{Error, Result};

/// Detection and false-alarm rates in percent. A rate is `None` when its
/// class has no samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub fdr: Option<f64>,
    pub far: Option<f64>,
    pub n_faulty: usize,
    pub n_normal: usize,
    pub alarms_faulty: usize,
    pub alarms_normal: usize,
}

/// FDR/FAR of the combined verdict.
pub fn evaluate(records: &[DetectionRecord]) -> Result<Rates> {
    rates_by(records, |r| r.verdict.is_faulty())
}

/// FDR/FAR of an arbitrary alarm predicate (e.g. a single statistic).
pub fn rates_by(records: &[DetectionRecord], alarm: impl Fn(&DetectionRecord) -> bool) -> Result<Rates> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut r = Rates {
        fdr: None,
        far: None,
        n_faulty: 0,
        n_normal: 0,
        alarms_faulty: 0,
        alarms_normal: 0,
    };
    for rec in records {
        let label = rec.label.ok_or_else(|| {
            Error::InvalidParameter(format!("sample {} has no label", rec.sample_index))
        })?;
        let alarmed = alarm(rec);
        if label == 0 {
            r.n_normal += 1;
            r.alarms_normal += usize::from(alarmed);
        } else {
            r.n_faulty += 1;
            r.alarms_faulty += usize::from(alarmed);
        }
    }
    let pct = |a: usize, n: usize| (n > 0).then(|| 100.0 * a as f64 / n as f64);
    r.fdr = pct(r.alarms_faulty, r.n_faulty);
    r.far = pct(r.alarms_normal, r.n_normal);
    Ok(r)
}
