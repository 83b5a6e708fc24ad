use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use olpp_core::datagen::cstr::{simulate_cstr, CstrConfig, CSTR_VARIABLES};
use olpp_core::datagen::numerical::{gen_numerical, inject_fault_numerical, NumericalConfig};
use olpp_core::datagen::suite::{cstr_suite, numerical_suite, BenchmarkCase, BenchmarkSuite};
use olpp_core::datagen::{FaultSpec, LabeledData};
use olpp_core::id::{id_stability_sweep, mle_id};
use olpp_core::io::{
    load_csv, load_model, normalize_apply, normalize_fit, read_statistics_csv, save_csv,
    save_model, write_statistics_csv, Dataset,
};
use olpp_core::monitoring::{
    detect_series, evaluate, fit_monitoring, rates_by, DetectionRecord, MonitoringModel,
};

use crate::args::{
    BenchmarkArgs, DetectArgs, EvaluateArgs, IdArgs, SimulateArgs, Suite, System, TrainArgs,
};
use crate::chart;
use crate::report::{
    AlarmCounts, BenchmarkCell, BenchmarkReport, BenchmarkRow, DetectSummary, EvaluationReport,
    IdReport, PerStatistic, TrainingReport,
};

pub const MODEL_FILE: &str = "model.json";
pub const TRAINING_REPORT_FILE: &str = "training_report.json";
pub const STATISTICS_FILE: &str = "statistics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CHART_FILE: &str = "chart.svg";
pub const BENCHMARK_CSV: &str = "benchmark.csv";
pub const BENCHMARK_JSON: &str = "benchmark.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Dataset> {
    load_csv(path).with_context(|| format!("reading {}", path.display()))
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let fault = args.fault.map(|id| {
        let mut spec = FaultSpec::standard(id);
        if let Some(onset) = args.onset {
            spec.onset_index = onset;
        }
        spec
    });
    let (labeled, names): (LabeledData, Vec<String>) = match args.system {
        System::Numerical => {
            let cfg = NumericalConfig {
                n_samples: args.samples.unwrap_or(1000),
                seed: args.seed,
                ..NumericalConfig::default()
            };
            let (x, _) = gen_numerical(&cfg)?;
            let labeled = match &fault {
                Some(spec) => inject_fault_numerical(&x, spec)?,
                None => LabeledData {
                    labels: vec![0; x.n_samples()],
                    data: x,
                },
            };
            (labeled, vec!["x1".into(), "x2".into(), "x3".into()])
        }
        System::Cstr => {
            let cfg = CstrConfig {
                seed: args.seed,
                low_pass: if args.raw { None } else { CstrConfig::default().low_pass },
                ..CstrConfig::default()
            };
            let labeled = simulate_cstr(&cfg, args.samples.unwrap_or(6000), fault.as_ref())?;
            (labeled, CSTR_VARIABLES.iter().map(|s| s.to_string()).collect())
        }
    };
    let dataset = Dataset::new(labeled.data, names, Some(labeled.labels), "simulate")?;
    save_csv(&args.out, &dataset).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} samples x {} variables to {}",
        dataset.data.n_samples(),
        dataset.data.n_vars(),
        args.out.display()
    );
    Ok(())
}

pub fn id_estimate(args: &IdArgs) -> Result<()> {
    let ds = load(&args.train)?;
    let stats = normalize_fit(&ds.data)?;
    let x = normalize_apply(&ds.data, &stats)?;
    let estimate = mle_id(&x, args.k1, args.k2)?;
    let sweep = if args.sweep {
        Some(id_stability_sweep(&x, &[5, 10], &[15, 20, 25], &[1, 2, 3, 4])?)
    } else {
        None
    };
    let report = IdReport {
        n_samples: x.n_samples(),
        n_vars: x.n_vars(),
        estimate,
        sweep,
    };
    emit_json(args.out.as_deref(), &report)
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let ds = load(&args.train)?;
    let config = args.model.config(args.method)?;
    let model = fit_monitoring(&ds.data, &config)?;
    fs::create_dir_all(&args.out)?;
    save_model(args.out.join(MODEL_FILE), &model)?;
    write_json(&args.out.join(TRAINING_REPORT_FILE), &TrainingReport::new(&model))?;
    let id = model
        .training
        .id
        .as_ref()
        .map_or("fixed".to_string(), |e| format!("{:.3}", e.pooled));
    println!(
        "{} model: dim {} (ID {id}), T² limit {:.4}, SPE limit {}, written to {}",
        model.projection.method,
        model.projection.dim(),
        model.j_th_t2,
        model.j_th_spe.map_or("disabled".into(), |j| format!("{j:.4}")),
        args.out.display()
    );
    Ok(())
}

fn evaluation(records: &[DetectionRecord], spe_active: bool) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        combined: evaluate(records)?,
        t2: rates_by(records, |r| r.t2_alarm)?,
        spe: if spe_active {
            Some(rates_by(records, |r| r.spe_alarm)?)
        } else {
            None
        },
    })
}

fn run_detection(model: &MonitoringModel, ds: &Dataset) -> Result<Vec<DetectionRecord>> {
    Ok(detect_series(model, &ds.data, ds.labels.as_deref())?)
}

pub fn detect(args: &DetectArgs) -> Result<()> {
    let model = load_model(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let ds = load(&args.test)?;
    let records = run_detection(&model, &ds)?;
    fs::create_dir_all(&args.out)?;

    let mut file = BufWriter::new(File::create(args.out.join(STATISTICS_FILE))?);
    write_statistics_csv(&mut file, &records, &model)?;
    file.flush()?;

    let count = |f: fn(&DetectionRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let summary = DetectSummary {
        n_samples: ds.data.n_samples(),
        warmup: ds.data.n_samples() - records.len(),
        n_records: records.len(),
        alarms: AlarmCounts {
            t2: count(|r| r.t2_alarm),
            spe: count(|r| r.spe_alarm),
            combined: count(|r| r.verdict.is_faulty()),
        },
        thresholds: PerStatistic {
            t2: model.j_th_t2,
            spe: model.j_th_spe,
        },
        rates: if ds.labels.is_some() {
            Some(evaluation(&records, model.spe_active())?)
        } else {
            None
        },
    };
    write_json(&args.out.join(SUMMARY_FILE), &summary)?;
    if args.svg {
        fs::write(args.out.join(CHART_FILE), chart::render(&records, &model, args.log_scale))?;
    }
    match &summary.rates {
        Some(r) => println!(
            "{} records, {} alarms, FDR {}, FAR {}",
            summary.n_records,
            summary.alarms.combined,
            fmt_pct(r.combined.fdr),
            fmt_pct(r.combined.far)
        ),
        None => println!("{} records, {} alarms", summary.n_records, summary.alarms.combined),
    }
    Ok(())
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.2}%"))
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let (records, spe_active) = match (&args.records, &args.model, &args.test) {
        (Some(path), _, _) => {
            let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
            let table = read_statistics_csv(file)?;
            (table.records, table.spe_active)
        }
        (None, Some(model), Some(test)) => {
            let model = load_model(model)?;
            let ds = load(test)?;
            if ds.labels.is_none() {
                bail!("{} has no label column", test.display());
            }
            (run_detection(&model, &ds)?, model.spe_active())
        }
        _ => bail!("give either --records or both --model and --test"),
    };
    emit_json(args.out.as_deref(), &evaluation(&records, spe_active)?)
}

fn file_suite(train: &Path, tests: &[std::path::PathBuf]) -> Result<BenchmarkSuite> {
    let train_ds = load(train)?;
    let mut cases = Vec::new();
    for path in tests {
        let ds = load(path)?;
        let labels = ds
            .labels
            .with_context(|| format!("{} has no label column", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        cases.push(BenchmarkCase {
            name,
            data: LabeledData {
                data: ds.data,
                labels,
            },
        });
    }
    Ok(BenchmarkSuite {
        name: "files".into(),
        variable_names: train_ds.variable_names,
        train: train_ds.data,
        cases,
    })
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let suite = match (args.suite, &args.train) {
        (Some(Suite::Numerical), _) => numerical_suite(args.seed.unwrap_or(1))?,
        (Some(Suite::Cstr), _) => cstr_suite(&CstrConfig {
            seed: args.seed.unwrap_or(0),
            ..CstrConfig::default()
        })?,
        (None, Some(train)) => file_suite(train, &args.test)?,
        (None, None) => bail!("give --suite or --train with at least one --test"),
    };
    if args.method.is_empty() {
        bail!("no methods requested");
    }

    let mut cells = Vec::new();
    for &method in &args.method {
        let config = args.model.config(method)?;
        let model = fit_monitoring(&suite.train, &config)
            .with_context(|| format!("training {method}"))?;
        for case in &suite.cases {
            let records = detect_series(&model, &case.data.data, Some(&case.data.labels))?;
            let normal: Vec<DetectionRecord> =
                records.iter().filter(|r| r.label == Some(0)).cloned().collect();
            cells.push(BenchmarkCell {
                case: case.name.clone(),
                method,
                dim: model.projection.dim(),
                estimated_id: model.training.id.as_ref().map(|e| e.pooled),
                rates: evaluate(&records)?,
                normal_part: if normal.is_empty() { None } else { Some(evaluate(&normal)?) },
            });
        }
    }

    let rows: Vec<BenchmarkRow> = suite
        .cases
        .iter()
        .map(|case| {
            let is_normal = case.data.labels.iter().all(|&l| l == 0);
            let values: BTreeMap<String, Option<f64>> = cells
                .iter()
                .filter(|c| c.case == case.name)
                .map(|c| {
                    let v = if is_normal { c.rates.far } else { c.rates.fdr };
                    (c.method.to_string(), v)
                })
                .collect();
            BenchmarkRow {
                case: case.name.clone(),
                metric: if is_normal { "FAR" } else { "FDR" },
                values,
            }
        })
        .collect();

    fs::create_dir_all(&args.out)?;
    let mut wtr = csv_writer(&args.out.join(BENCHMARK_CSV))?;
    let mut header = vec!["case".to_string(), "metric".to_string()];
    header.extend(args.method.iter().map(|m| m.to_string()));
    writeln!(wtr, "{}", header.join(","))?;
    for row in &rows {
        let mut line = vec![row.case.clone(), row.metric.to_string()];
        for m in &args.method {
            let v = row.values.get(m.name()).copied().flatten();
            line.push(v.map_or(String::new(), |v| format!("{v:.2}")));
        }
        writeln!(wtr, "{}", line.join(","))?;
    }
    wtr.flush()?;

    let report = BenchmarkReport {
        suite: suite.name.clone(),
        methods: args.method.clone(),
        rows,
        cells,
    };
    write_json(&args.out.join(BENCHMARK_JSON), &report)?;

    let mut table = String::new();
    table.push_str(&format!("{:<10} {:<6}", "case", "metric"));
    for m in &args.method {
        table.push_str(&format!(" {:>8}", m.name()));
    }
    for row in &report.rows {
        table.push_str(&format!("\n{:<10} {:<6}", row.case, row.metric));
        for m in &args.method {
            let v = row.values.get(m.name()).copied().flatten();
            table.push_str(&format!(" {:>8}", v.map_or("-".into(), |v| format!("{v:.2}"))));
        }
    }
    println!("{table}");
    Ok(())
}

fn csv_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("writing {}", path.display()))?,
    ))
}
