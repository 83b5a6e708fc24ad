//! Frozen benchmark suites: a normal training set plus labeled test sets.

use super::cstr::{simulate_cstr, CstrConfig, CSTR_VARIABLES};
use super::numerical::{gen_numerical, inject_fault_numerical, NumericalConfig};
use super::{FaultId, FaultSpec, LabeledData};
use crate::error::Result;
use crate::matrix::DataMatrix;

pub const NUMERICAL_SAMPLES: usize = 1000;
pub const CSTR_TRAIN_SAMPLES: usize = 6000;
/// 600 minutes at one sample per second.
pub const CSTR_TEST_SAMPLES: usize = 36_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkCase {
    /// `normal` or the fault name (`F1` … `F5`).
    pub name: String,
    pub data: LabeledData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite {
    pub name: String,
    pub variable_names: Vec<String>,
    pub train: DataMatrix,
    pub cases: Vec<BenchmarkCase>,
}

/// Three-variable system: 1000 training samples, one normal test set and one
/// set per fault F1–F3 (step from the 501st sample). Seeds are `seed`,
/// `seed + 1`, … in that order.
pub fn numerical_suite(seed: u64) -> Result<BenchmarkSuite> {
    let gen = |offset: u64| {
        gen_numerical(&NumericalConfig {
            n_samples: NUMERICAL_SAMPLES,
            seed: seed + offset,
            ..NumericalConfig::default()
        })
        .map(|(x, _)| x)
    };
    let train = gen(0)?;
    let normal = gen(1)?;
    let mut cases = vec![BenchmarkCase {
        name: "normal".into(),
        data: LabeledData {
            labels: vec![0; normal.n_samples()],
            data: normal,
        },
    }];
    for (i, id) in [FaultId::F1, FaultId::F2, FaultId::F3].into_iter().enumerate() {
        let test = gen(2 + i as u64)?;
        cases.push(BenchmarkCase {
            name: format!("{id:?}"),
            data: inject_fault_numerical(&test, &FaultSpec::standard(id))?,
        });
    }
    Ok(BenchmarkSuite {
        name: "numerical".into(),
        variable_names: vec!["x1".into(), "x2".into(), "x3".into()],
        train,
        cases,
    })
}

/// CSTR: 6000 normal training samples, then 600-minute normal, F4 and F5
/// runs (faults from minute 100). Seeds are `config.seed`, `+1`, `+2`, `+3`.
pub fn cstr_suite(config: &CstrConfig) -> Result<BenchmarkSuite> {
    let with_seed = |offset: u64| CstrConfig {
        seed: config.seed + offset,
        ..config.clone()
    };
    let train = simulate_cstr(&with_seed(0), CSTR_TRAIN_SAMPLES, None)?.data;
    let mut cases = vec![BenchmarkCase {
        name: "normal".into(),
        data: simulate_cstr(&with_seed(1), CSTR_TEST_SAMPLES, None)?,
    }];
    for (i, id) in [FaultId::F4, FaultId::F5].into_iter().enumerate() {
        cases.push(BenchmarkCase {
            name: format!("{id:?}"),
            data: simulate_cstr(&with_seed(2 + i as u64), CSTR_TEST_SAMPLES, Some(&FaultSpec::standard(id)))?,
        });
    }
    Ok(BenchmarkSuite {
        name: "cstr".into(),
        variable_names: CSTR_VARIABLES.iter().map(|s| s.to_string()).collect(),
        train,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_suite_shape() {
        let suite = numerical_suite(1).unwrap();
        assert_eq!(suite.train.n_samples(), 1000);
        let names: Vec<&str> = suite.cases.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["normal", "F1", "F2", "F3"]);
        assert!(suite.cases[0].data.labels.iter().all(|&l| l == 0));
        assert_eq!(suite.cases[1].data.labels[499], 0);
        assert_eq!(suite.cases[1].data.labels[500], 1);
        assert_eq!(suite, numerical_suite(1).unwrap());
    }
}
