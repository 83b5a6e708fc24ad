//! Dataset ingestion, normalization statistics and model files.
//!
//! CSV files carry a header naming each variable, one sample per row, comma
//! delimited with `.` decimals. An optional column named `label` holds the
//! ground-truth fault number (0 = normal). Values are written with Rust's
//! shortest round-trip formatting, so save → load is bit-exact.
//!
//! Model files are UTF-8 JSON objects. Field order: `format`, `version`,
//! `model` (see [`crate::monitoring::MonitoringModel`]). Matrices are stored
//! as `[data, nrows, ncols]` with `data` in column-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::{Label, LabeledData};
use crate::error::{Error, Result};
use crate::matrix::DataMatrix;
use crate::monitoring::{DetectionRecord, MonitoringModel, Verdict};

pub const LABEL_COLUMN: &str = "label";
pub const STATISTICS_HEADER: [&str; 7] =
    ["sample_index", "t2", "spe", "j_th_t2", "j_th_spe", "verdict", "label"];
pub const MODEL_FORMAT: &str = "olpp-monitoring-model";
pub const MODEL_VERSION: u32 = 1;

/// A loaded dataset: `m × N` values, variable names, optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub data: DataMatrix,
    pub variable_names: Vec<String>,
    pub labels: Option<Vec<Label>>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        data: DataMatrix,
        variable_names: Vec<String>,
        labels: Option<Vec<Label>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if variable_names.len() != data.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: data.n_vars(),
                found: variable_names.len(),
            });
        }
        if let Some(labels) = &labels {
            if labels.len() != data.n_samples() {
                return Err(Error::DimensionMismatch {
                    expected: data.n_samples(),
                    found: labels.len(),
                });
            }
        }
        Ok(Self {
            data,
            variable_names,
            labels,
            provenance: provenance.into(),
        })
    }

    /// Wraps generated data with default names `x1..xm`.
    pub fn from_labeled(labeled: LabeledData, provenance: impl Into<String>) -> Result<Self> {
        let names = (1..=labeled.data.n_vars()).map(|i| format!("x{i}")).collect();
        Self::new(labeled.data, names, Some(labeled.labels), provenance)
    }
}

/// Reads a CSV dataset. Errors name the 1-based file line of the bad row.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut ds = read_csv(BufReader::new(file))?;
    ds.provenance = path.display().to_string();
    Ok(ds)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    if names.is_empty() {
        return Err(Error::Csv {
            row: 1,
            message: "no variable columns".into(),
        });
    }

    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::Csv {
            row: line,
            message: e.to_string(),
        })?;
        for (col, cell) in record.iter().enumerate() {
            if Some(col) == label_col {
                let label = parse_label(cell).ok_or_else(|| Error::Csv {
                    row: line,
                    message: format!("invalid label '{cell}'"),
                })?;
                labels.push(label);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Csv {
                    row: line,
                    message: format!("non-numeric cell '{cell}' in column '{}'", &header[col]),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv {
                        row: line,
                        message: format!("non-finite value in column '{}'", &header[col]),
                    });
                }
                values.push(v);
            }
        }
    }
    let m = names.len();
    let n = values.len() / m;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let data = DataMatrix::new(DMatrix::from_column_slice(m, n, &values))?;
    let labels = label_col.map(|_| labels);
    Dataset::new(data, names, labels, "csv")
}

fn parse_label(cell: &str) -> Option<Label> {
    if let Ok(v) = cell.parse::<Label>() {
        return Some(v);
    }
    // accept integral floats such as "1.0"
    let f: f64 = cell.parse().ok()?;
    (f >= 0.0 && f.fract() == 0.0 && f <= Label::MAX as f64).then_some(f as Label)
}

pub fn save_csv(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let file = File::create(path)?;
    write_csv(BufWriter::new(file), dataset)
}

pub fn write_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv {
        row: 0,
        message: e.to_string(),
    };
    let mut header: Vec<String> = dataset.variable_names.clone();
    if dataset.labels.is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    wtr.write_record(&header).map_err(csv_err)?;
    let data = dataset.data.as_matrix();
    for j in 0..data.ncols() {
        let mut row: Vec<String> = data.column(j).iter().map(|v| format!("{v:?}")).collect();
        if let Some(labels) = &dataset.labels {
            row.push(labels[j].to_string());
        }
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Per-variable mean and standard deviation (unbiased, `N - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    /// Always positive: zero-variance variables get 1.
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Normalizes one raw sample.
    pub fn apply_sample(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(DVector::from_fn(x.len(), |i, _| (x[i] - self.mean[i]) / self.std[i]))
    }
}

pub fn normalize_fit(x: &DataMatrix) -> Result<NormStats> {
    let n = x.n_samples();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "normalization needs at least two samples".into(),
        ));
    }
    let data = x.as_matrix();
    let mut mean = Vec::with_capacity(x.n_vars());
    let mut std = Vec::with_capacity(x.n_vars());
    for i in 0..x.n_vars() {
        let row = data.row(i);
        let mu = row.sum() / n as f64;
        let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if sd > 0.0 && sd.is_finite() {
            std.push(sd);
        } else {
            log::warn!("variable {i} has zero variance in training data; using unit scale");
            std.push(1.0);
        }
        mean.push(mu);
    }
    Ok(NormStats { mean, std })
}

pub fn normalize_apply(x: &DataMatrix, stats: &NormStats) -> Result<DataMatrix> {
    if x.n_vars() != stats.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.dim(),
            found: x.n_vars(),
        });
    }
    let data = x.as_matrix();
    DataMatrix::new(DMatrix::from_fn(x.n_vars(), x.n_samples(), |i, j| {
        (data[(i, j)] - stats.mean[i]) / stats.std[i]
    }))
}

/// Writes detection records as CSV with columns [`STATISTICS_HEADER`].
/// `j_th_spe` is empty when SPE is disabled, `label` when unknown.
pub fn write_statistics_csv<W: Write>(
    writer: W,
    records: &[DetectionRecord],
    model: &MonitoringModel,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Csv {
        row: 0,
        message: e.to_string(),
    };
    wtr.write_record(STATISTICS_HEADER).map_err(csv_err)?;
    let j_t2 = format!("{:?}", model.j_th_t2);
    let j_spe = model.j_th_spe.map(|j| format!("{j:?}")).unwrap_or_default();
    for r in records {
        wtr.write_record([
            r.sample_index.to_string(),
            format!("{:?}", r.t2),
            format!("{:?}", r.spe),
            j_t2.clone(),
            j_spe.clone(),
            r.verdict.name().to_string(),
            r.label.map(|l| l.to_string()).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a statistics CSV back into records. Per-statistic alarms are
/// recomputed from the threshold columns.
/// Records read back from a statistics file.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsTable {
    pub records: Vec<DetectionRecord>,
    /// False when every row left `j_th_spe` empty.
    pub spe_active: bool,
}

pub fn read_statistics_csv<R: Read>(reader: R) -> Result<StatisticsTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().ne(STATISTICS_HEADER) {
        return Err(Error::Csv {
            row: 1,
            message: format!("expected header {}", STATISTICS_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    let mut spe_active = false;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let bad = |message: String| Error::Csv { row: line, message };
        let record = record.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("invalid {} '{}'", STATISTICS_HEADER[i], &record[i])))
        };
        let sample_index = record[0]
            .parse::<usize>()
            .map_err(|_| bad(format!("invalid sample_index '{}'", &record[0])))?;
        let (t2, spe, j_t2) = (num(1)?, num(2)?, num(3)?);
        let j_spe = if record[4].is_empty() { None } else { Some(num(4)?) };
        spe_active |= j_spe.is_some();
        let verdict = match &record[5] {
            "normal" => Verdict::Normal,
            "faulty" => Verdict::Faulty,
            other => return Err(bad(format!("invalid verdict '{other}'"))),
        };
        let label = if record[6].is_empty() {
            None
        } else {
            Some(parse_label(&record[6]).ok_or_else(|| bad(format!("invalid label '{}'", &record[6])))?)
        };
        out.push(DetectionRecord {
            sample_index,
            t2,
            spe,
            t2_alarm: t2 > j_t2,
            spe_alarm: j_spe.is_some_and(|j| spe > j),
            verdict,
            label,
        });
    }
    Ok(StatisticsTable {
        records: out,
        spe_active,
    })
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format: &'a str,
    version: u32,
    model: &'a MonitoringModel,
}

#[derive(Deserialize)]
struct ModelHeader {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct ModelFileIn {
    model: MonitoringModel,
}

pub fn save_model(path: impl AsRef<Path>, model: &MonitoringModel) -> Result<()> {
    let text = model_to_string(model)?;
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(text.as_bytes())?;
    file.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MonitoringModel> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    model_from_str(&text)
}

pub fn model_to_string(model: &MonitoringModel) -> Result<String> {
    let out = ModelFileOut {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        model,
    };
    serde_json::to_string_pretty(&out).map_err(|e| Error::Format(e.to_string()))
}

pub fn model_from_str(text: &str) -> Result<MonitoringModel> {
    let header: ModelHeader =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unexpected format tag '{}'", header.format)));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Version {
            expected: MODEL_VERSION,
            found: header.version,
        });
    }
    let file: ModelFileIn = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    file.model.validate()?;
    Ok(file.model)
}
