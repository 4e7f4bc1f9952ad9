use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{exec_of, load_dataset, run_round, Clock, DataSource, Method, PipelineConfig, Round};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub name: String,
    pub source: DataSource,
}

/// One value of the long-format benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub round: usize,
    pub method: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; 0 for a single value.
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Some(MeanSe { mean, se, n })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub metrics: BTreeMap<String, MeanSe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub dataset: String,
    pub rounds: usize,
    /// Rounds whose selection broke at least one bound.
    pub infeasible_rounds: usize,
    pub methods: Vec<MethodSummary>,
}

impl DatasetSummary {
    pub fn get(&self, method: Method, metric: &str) -> Option<MeanSe> {
        self.methods
            .iter()
            .find(|m| m.method == method.name())
            .and_then(|m| m.metrics.get(metric).copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub datasets: Vec<DatasetSummary>,
    /// `(dataset, error)` for datasets that could not be run.
    pub failures: Vec<(String, String)>,
}

impl BenchmarkReport {
    pub fn dataset(&self, name: &str) -> Option<&DatasetSummary> {
        self.datasets.iter().find(|d| d.dataset == name)
    }

    pub fn write_rows_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            datasets: &'a [DatasetSummary],
            failures: &'a [(String, String)],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            datasets: &self.datasets,
            failures: &self.failures,
        })?)
    }
}

fn round_values(r: &Round) -> Vec<(Method, &'static str, Option<f64>)> {
    let mut out = Vec::new();
    for m in &r.reports {
        let e = &m.report;
        let cov = e.covered_scores;
        out.extend([
            (m.method, "accuracy", Some(e.accuracy)),
            (m.method, "macro_precision", Some(e.macro_precision)),
            (m.method, "macro_recall", Some(e.macro_recall)),
            (m.method, "kappa", Some(e.kappa)),
            (m.method, "coverage", Some(e.coverage)),
            (m.method, "covered_accuracy", cov.map(|s| s.accuracy)),
            (m.method, "covered_kappa", cov.map(|s| s.kappa)),
            (m.method, "fidelity", e.fidelity.all.overall),
            (m.method, "fidelity_covered", e.fidelity.covered.overall),
            (m.method, "fidelity_covered_rf_correct", e.fidelity.covered.rf_correct),
            (m.method, "fidelity_uncovered", e.fidelity.uncovered.overall),
            (m.method, "total_rules", Some(e.n_rules as f64)),
            (m.method, "rules_per_class", Some(e.rules_per_class)),
            (m.method, "rule_length", Some(e.atts_per_rule)),
            (m.method, "rule_confidence", Some(m.mean_confidence)),
        ]);
    }
    out
}

fn run_dataset(cfg: &PipelineConfig, spec: &DatasetSpec) -> Result<(Vec<BenchmarkRow>, DatasetSummary)> {
    let mut cfg = cfg.clone();
    cfg.data = spec.source.clone();
    cfg.validate()?;
    let ds = load_dataset(&cfg)?;
    let exec = exec_of(&cfg);
    let rounds: Vec<Result<_>> = exec.map_range(cfg.cv.splits, |i| {
        let mut clock = Clock::default();
        run_round(&cfg, &ds, i, exec, &mut clock).map(|r| (round_values(&r), !r.solution.violations.is_empty()))
    });
    let mut rows = Vec::new();
    let mut infeasible_rounds = 0;
    let mut values: BTreeMap<(Method, &str), Vec<f64>> = BTreeMap::new();
    for (i, r) in rounds.into_iter().enumerate() {
        let (vals, broke) = r?;
        infeasible_rounds += usize::from(broke);
        for (method, metric, v) in vals {
            let Some(v) = v else { continue };
            rows.push(BenchmarkRow {
                dataset: spec.name.clone(),
                round: i,
                method: method.name().into(),
                metric: metric.into(),
                value: v,
            });
            values.entry((method, metric)).or_default().push(v);
        }
    }
    let methods = Method::ALL
        .iter()
        .map(|&m| MethodSummary {
            method: m.name().into(),
            metrics: values
                .iter()
                .filter(|((mm, _), _)| *mm == m)
                .filter_map(|((_, metric), v)| MeanSe::of(v).map(|s| (metric.to_string(), s)))
                .collect(),
        })
        .collect();
    Ok((
        rows,
        DatasetSummary {
            dataset: spec.name.clone(),
            rounds: cfg.cv.splits,
            infeasible_rounds,
            methods,
        },
    ))
}

/// `cfg.cv.splits` seeded splits per dataset, rounds in parallel when the
/// config allows it. A failing dataset is logged and skipped.
pub fn run_benchmark(cfg: &PipelineConfig, datasets: &[DatasetSpec]) -> Result<BenchmarkReport> {
    if datasets.is_empty() {
        return Err(Error::InvalidParam("benchmark needs at least one dataset".into()));
    }
    cfg.validate()?;
    let mut report = BenchmarkReport {
        rows: Vec::new(),
        datasets: Vec::new(),
        failures: Vec::new(),
    };
    for spec in datasets {
        match run_dataset(cfg, spec) {
            Ok((rows, summary)) => {
                report.rows.extend(rows);
                report.datasets.push(summary);
            }
            Err(e) => {
                log::error!("dataset {}: {e}", spec.name);
                report.failures.push((spec.name.clone(), e.to_string()));
            }
        }
    }
    Ok(report)
}
