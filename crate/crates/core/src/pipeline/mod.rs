//! End-to-end runs: one split with all artifacts, or repeated splits over
//! several datasets with aggregate scores.

mod bench;
pub mod config;
mod upset;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use bench::{run_benchmark, BenchmarkReport, BenchmarkRow, DatasetSpec, DatasetSummary, MeanSe, MethodSummary};
pub use config::{CvParams, DataSource, InitError, PipelineConfig};
pub use upset::{export_upset, UpsetCombination, UpsetExport, UpsetRule};

use crate::data::{generate_xor, load_csv, stratified_split, Dataset};
use crate::enrich::{
    build_transactions_with, mine_metarules, select_complementary, write_enriched_csv, EnrichParams, EnrichedRule,
};
use crate::ensemble::{
    build_ordered_list, complexity, default_only_list, evaluate, fidelity, report, EvaluationReport, Mode,
    RuleClassifier,
};
use crate::forest::{forest_error, oob_error, predict_forest, train_forest_with, Forest};
use crate::preselect::{preselect_with, Preselection};
use crate::rules::{build_coverage_with, extract_rules, metrics_from_cover, write_metrics_csv, Rule, RuleRecord};
use crate::select::{build_problem, solve, write_lp, SelectionProblem, SelectionSolution};
use crate::{seed, Error, Exec, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    ForestTraining,
    ExtractRules,
    PreselectRules,
    PrepareOptInputs,
    BuildOptModel,
    RunOptModel,
    Enrichment,
    Evaluation,
    Io,
}

impl Phase {
    pub const ALL: [Phase; 9] = [
        Phase::ForestTraining,
        Phase::ExtractRules,
        Phase::PreselectRules,
        Phase::PrepareOptInputs,
        Phase::BuildOptModel,
        Phase::RunOptModel,
        Phase::Enrichment,
        Phase::Evaluation,
        Phase::Io,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Phase::ForestTraining => "forest training",
            Phase::ExtractRules => "extract rules",
            Phase::PreselectRules => "preselect rules",
            Phase::PrepareOptInputs => "prepare opt. inputs",
            Phase::BuildOptModel => "build opt. model",
            Phase::RunOptModel => "run opt. model",
            Phase::Enrichment => "enrichment",
            Phase::Evaluation => "evaluation",
            Phase::Io => "io",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTime {
    pub phase: String,
    pub ms: f64,
}

/// Wall-clock breakdown of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub phases: Vec<PhaseTime>,
    pub total_ms: f64,
}

impl Timing {
    pub fn accounted_ms(&self) -> f64 {
        self.phases.iter().map(|p| p.ms).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["phase", "ms"])?;
        for p in &self.phases {
            w.write_record([p.phase.clone(), format!("{:.3}", p.ms)])?;
        }
        w.write_record(["total".to_string(), format!("{:.3}", self.total_ms)])?;
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Monotonic per-phase stopwatch.
pub struct Clock {
    start: Instant,
    ms: [f64; 9],
}

impl Default for Clock {
    fn default() -> Self {
        Clock {
            start: Instant::now(),
            ms: [0.0; 9],
        }
    }
}

impl Clock {
    pub fn time<T>(&mut self, phase: Phase, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        let k = Phase::ALL.iter().position(|&p| p == phase).unwrap_or(0);
        self.ms[k] += t.elapsed().as_secs_f64() * 1e3;
        out
    }

    pub fn finish(&self) -> Timing {
        Timing {
            phases: Phase::ALL
                .iter()
                .zip(self.ms)
                .map(|(p, ms)| PhaseTime {
                    phase: p.label().to_string(),
                    ms,
                })
                .collect(),
            total_ms: self.start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The forest itself.
    Rf,
    /// Voting over all preselected rules.
    Preselected,
    /// Voting over the selected rules.
    Ore,
    /// Greedy ordered list over the selected rules.
    OreList,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rf, Method::Preselected, Method::Ore, Method::OreList];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rf => "rf",
            Method::Preselected => "preselected",
            Method::Ore => "ore",
            Method::OreList => "ore_list",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub report: EvaluationReport,
    /// Mean training confidence of the rules that can fire.
    pub mean_confidence: f64,
}

/// Everything one split produces.
pub struct Round {
    pub index: usize,
    pub train: Dataset,
    pub test: Dataset,
    pub forest: Forest,
    pub init_error: f64,
    /// Extracted rules with training metrics, before any filtering.
    pub extracted: Vec<RuleRecord>,
    pub preselection: Preselection,
    pub problem: SelectionProblem,
    pub solution: SelectionSolution,
    pub selected: Vec<RuleRecord>,
    pub decision_set: RuleClassifier,
    pub ordered_list: RuleClassifier,
    pub enriched: Vec<EnrichedRule>,
    pub rf_test_pred: Vec<u32>,
    pub reports: Vec<MethodReport>,
}

impl Round {
    pub fn method(&self, m: Method) -> &MethodReport {
        self.reports
            .iter()
            .find(|r| r.method == m)
            .expect("every method is reported")
    }
}

pub fn load_dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Xor(n) => generate_xor(cfg.seed, *n),
        DataSource::Csv { path, .. } => load_csv(path, &cfg.target()?),
    }
}

pub fn exec_of(cfg: &PipelineConfig) -> Exec {
    if cfg.parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

fn mean_confidence(rules: &[RuleRecord]) -> f64 {
    if rules.is_empty() {
        return 0.0;
    }
    rules.iter().map(|r| r.metrics.confidence).sum::<f64>() / rules.len() as f64
}

fn rf_report(extracted: &[RuleRecord], test: &Dataset, rf_pred: &[u32]) -> Result<EvaluationReport> {
    let all = vec![true; test.n()];
    let ev = evaluate(rf_pred, test.labels(), &all, test.n_classes())?;
    let fid = fidelity(rf_pred, rf_pred, test.labels(), &all)?;
    let (rules_per_class, atts_per_rule) = complexity(extracted, test.n_classes());
    Ok(EvaluationReport {
        accuracy: ev.all.accuracy,
        macro_precision: ev.all.macro_precision,
        macro_recall: ev.all.macro_recall,
        kappa: ev.all.kappa,
        coverage: 1.0,
        covered_scores: ev.covered,
        fidelity: fid,
        n_rules: extracted.len(),
        rules_per_class,
        atts_per_rule,
    })
}

/// Runs every stage on split `index` of `ds`. Seeds derive from the root
/// seed and the split index only, so a round replays on its own.
/// Pairs each rule with its metrics on `train`.
pub fn rule_records(rules: Vec<Rule>, train: &Dataset, exec: Exec) -> Vec<RuleRecord> {
    let cov = build_coverage_with(&rules, train, exec);
    rules
        .into_iter()
        .enumerate()
        .map(|(j, rule)| {
            let metrics = metrics_from_cover(&rule, &cov.cover(j), train);
            RuleRecord { rule, metrics }
        })
        .collect()
}

/// Training error of the forest used as the selection program's baseline.
pub fn initial_error(source: InitError, forest: &Forest, train: &Dataset) -> Result<f64> {
    let resub = forest_error(forest, train)?;
    Ok(match source {
        InitError::Resubstitution => resub,
        InitError::Oob => oob_error(forest, train)?.unwrap_or(resub),
    })
}

/// Complementary rules for the selected ids, mined over PSR and PSRS.
pub fn enrich_selection(
    psr: &[RuleRecord],
    psrs: &[RuleRecord],
    selected_ids: &[usize],
    train: &Dataset,
    params: &EnrichParams,
    exec: Exec,
) -> Result<Vec<EnrichedRule>> {
    let pool: Vec<RuleRecord> = psr.iter().chain(psrs).cloned().collect();
    let rules: Vec<_> = pool.iter().map(|r| r.rule.clone()).collect();
    let tx = build_transactions_with(&rules, train, exec);
    let meta = mine_metarules(&tx, selected_ids, params)?;
    select_complementary(&meta, &pool, selected_ids)
}

pub fn run_round(cfg: &PipelineConfig, ds: &Dataset, index: usize, exec: Exec, clock: &mut Clock) -> Result<Round> {
    cfg.validate()?;
    let i = index as u64;
    let (train, test) = stratified_split(ds, cfg.cv.train_ratio, seed::derive(cfg.seed, "split", i))
        .map_err(Error::in_stage("split"))?;

    let fp = crate::forest::ForestParams {
        seed: seed::derive(cfg.seed, "forest", i),
        ..cfg.forest.clone()
    };
    let forest = clock
        .time(Phase::ForestTraining, || train_forest_with(&train, &fp, exec))
        .map_err(Error::in_stage("forest training"))?;

    let extracted = clock.time(Phase::ExtractRules, || {
        rule_records(extract_rules(&forest), &train, exec)
    });

    let preselection = clock
        .time(Phase::PreselectRules, || {
            let rules: Vec<_> = extracted.iter().map(|r| r.rule.clone()).collect();
            preselect_with(&rules, &train, &cfg.preselect, exec)
        })
        .map_err(Error::in_stage("preselect rules"))?;

    let (init_error, metrics, ids) = clock
        .time(Phase::PrepareOptInputs, || -> Result<_> {
            let init = initial_error(cfg.init_error, &forest, &train)?;
            let metrics: Vec<_> = preselection.psr.iter().map(|r| r.metrics.clone()).collect();
            let ids: Vec<_> = preselection.psr.iter().map(|r| r.rule.id).collect();
            Ok((init, metrics, ids))
        })
        .map_err(Error::in_stage("prepare opt. inputs"))?;

    let problem = clock
        .time(Phase::BuildOptModel, || {
            build_problem(&metrics, &preselection.coverage, init_error, &cfg.select)?.with_rule_ids(ids)
        })
        .map_err(Error::in_stage("build opt. model"))?;

    let opts = crate::select::SolveOptions {
        seed: seed::derive(cfg.seed, "solve", i),
        ..cfg.solve.clone()
    };
    let solution = clock
        .time(Phase::RunOptModel, || solve(&problem, &opts, exec))
        .map_err(Error::in_stage("run opt. model"))?;
    if !solution.violations.is_empty() {
        log::warn!(
            "round {index}: selection breaks {} bound(s); reporting it anyway",
            solution.violations.len()
        );
    }
    let selected: Vec<RuleRecord> = solution
        .selected()
        .into_iter()
        .map(|j| preselection.psr[j].clone())
        .collect();

    let enriched = clock
        .time(Phase::Enrichment, || {
            enrich_selection(
                &preselection.psr,
                &preselection.psrs,
                &solution.selected_ids,
                &train,
                &cfg.enrich,
                exec,
            )
        })
        .map_err(Error::in_stage("enrichment"))?;

    let (decision_set, ordered_list, rf_test_pred, reports) = clock
        .time(Phase::Evaluation, || -> Result<_> {
            let rf_pred = predict_forest(&forest, &test)?;
            let ds_clf = RuleClassifier::decision_set(selected.clone(), &train);
            let list = if selected.is_empty() {
                default_only_list(&train)
            } else {
                build_ordered_list(selected.clone(), &train)?
            };
            let pre = RuleClassifier::decision_set(preselection.psr.clone(), &train);
            let mut reports = vec![MethodReport {
                method: Method::Rf,
                report: rf_report(&extracted, &test, &rf_pred)?,
                mean_confidence: mean_confidence(&extracted),
            }];
            for (method, clf) in [
                (Method::Preselected, &pre),
                (Method::Ore, &ds_clf),
                (Method::OreList, &list),
            ] {
                reports.push(MethodReport {
                    method,
                    report: report(clf, &test, &rf_pred)?,
                    mean_confidence: mean_confidence(&clf.active_rules()),
                });
            }
            Ok((ds_clf, list, rf_pred, reports))
        })
        .map_err(Error::in_stage("evaluation"))?;

    Ok(Round {
        index,
        train,
        test,
        forest,
        init_error,
        extracted,
        preselection,
        problem,
        solution,
        selected,
        decision_set,
        ordered_list,
        enriched,
        rf_test_pred,
        reports,
    })
}

pub const ORDERED_LIST_HEADER: [&str; 6] = ["Order", "ID Rule", "Condition", "Ypred", "Freq", "Err"];

pub fn write_ordered_list_csv<W: Write>(clf: &RuleClassifier, ds: &Dataset, out: W) -> Result<()> {
    if clf.mode != Mode::OrderedList {
        return Err(Error::InvalidParam("not an ordered list".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ORDERED_LIST_HEADER)?;
    for (pos, step) in clf.trace.iter().enumerate() {
        let (id, cond) = match step.rule {
            Some(k) => (clf.rules[k].rule.id.to_string(), clf.rules[k].rule.condition.render(ds)),
            None => (String::new(), "else".to_string()),
        };
        w.write_record([
            (pos + 1).to_string(),
            id,
            cond,
            ds.class_levels()[step.class as usize].clone(),
            step.freq.to_string(),
            step.err.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Round summary written as `evaluation.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub init_error: f64,
    pub extracted: usize,
    pub preselect: crate::preselect::PreselectStats,
    pub selected_ids: Vec<usize>,
    pub objective: f64,
    pub status: crate::select::Status,
    pub default_class: String,
    pub methods: Vec<MethodReport>,
}

/// What [`run_pipeline`] leaves behind.
pub struct PipelineRun {
    pub dir: PathBuf,
    pub round: Round,
    pub timing: Timing,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One split, every stage, every artifact in `cfg.output`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let mut clock = Clock::default();
    let exec = exec_of(cfg);
    let dir = cfg.output.clone();
    let ds = clock
        .time(Phase::Io, || -> Result<_> {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            load_dataset(cfg)
        })
        .map_err(Error::in_stage("load data"))?;
    let round = run_round(cfg, &ds, 0, exec, &mut clock)?;
    clock
        .time(Phase::Io, || write_artifacts(cfg, &dir, &round))
        .map_err(Error::in_stage("write artifacts"))?;
    let timing = clock.finish();
    let timing_io = || -> Result<()> {
        timing.write_csv(create(&dir.join("timing.csv"))?)?;
        write_text(&dir.join("timing.json"), &serde_json::to_string_pretty(&timing)?)
    };
    timing_io().map_err(Error::in_stage("write artifacts"))?;
    Ok(PipelineRun { dir, round, timing })
}

fn write_artifacts(cfg: &PipelineConfig, dir: &Path, r: &Round) -> Result<()> {
    let train = &r.train;
    r.train.write_csv(dir.join("train.csv"))?;
    r.test.write_csv(dir.join("test.csv"))?;
    r.forest.save(dir.join("forest.json"))?;
    write_text(
        &dir.join("schema.json"),
        &serde_json::to_string_pretty(&train.schema())?,
    )?;
    write_metrics_csv(&r.extracted, train, create(&dir.join("rules.csv"))?)?;
    write_metrics_csv(&r.preselection.psr, train, create(&dir.join("psr.csv"))?)?;
    write_metrics_csv(&r.preselection.psrs, train, create(&dir.join("psrs.csv"))?)?;
    let path = dir.join("psr_coverage.bin");
    r.preselection
        .coverage
        .write_binary(create(&path)?)
        .map_err(|e| Error::io(&path, e))?;
    if cfg.export_lp {
        let path = dir.join("selection.lp");
        write_lp(&r.problem, create(&path)?).map_err(|e| Error::io(&path, e))?;
    }
    write_text(&dir.join("selection.json"), &r.solution.to_json()?)?;
    write_metrics_csv(&r.selected, train, create(&dir.join("selected.csv"))?)?;
    write_ordered_list_csv(&r.ordered_list, train, create(&dir.join("ordered_list.csv"))?)?;
    write_enriched_csv(&r.enriched, train, create(&dir.join("enriched.csv"))?)?;
    if !r.selected.is_empty() {
        let rules: Vec<_> = r.selected.iter().map(|s| s.rule.clone()).collect();
        let up = export_upset(&rules, train)?;
        write_text(&dir.join("upset.json"), &up.to_json()?)?;
        up.write_combinations_csv(create(&dir.join("upset.csv"))?)?;
    }
    let summary = RunSummary {
        n_train: r.train.n(),
        n_test: r.test.n(),
        init_error: r.init_error,
        extracted: r.extracted.len(),
        preselect: r.preselection.stats.clone(),
        selected_ids: r.solution.selected_ids.clone(),
        objective: r.solution.objective,
        status: r.solution.status,
        default_class: train.class_levels()[r.decision_set.default_class as usize].clone(),
        methods: r.reports.clone(),
    };
    write_text(&dir.join("evaluation.json"), &serde_json::to_string_pretty(&summary)?)
}
