use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ruleforest::data::{generate_xor, load_csv, load_csv_like, Dataset, Schema, Target};
use ruleforest::enrich::write_enriched_csv;
use ruleforest::ensemble::{build_ordered_list, report, RuleClassifier};
use ruleforest::forest::{predict_forest, train_forest_with, Forest};
use ruleforest::pipeline::{
    enrich_selection, exec_of, export_upset, initial_error, rule_records, run_benchmark, run_pipeline,
    write_ordered_list_csv, DataSource, DatasetSpec, Method, PipelineConfig,
};
use ruleforest::preselect::preselect_with;
use ruleforest::rules::{build_coverage_with, extract_rules, read_metrics_csv, write_metrics_csv, RuleRecord};
use ruleforest::select::{build_problem, solve, write_lp, SelectionProblem, SelectionSolution};

#[derive(Parser)]
#[command(
    name = "ruleforest",
    version,
    about = "Interpretable rule ensembles mined from random forests"
)]
struct Cli {
    /// INI config file; keys as in `key = value` or `[section]` blocks.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Config override `key=value`, applied after the file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArg {
    /// Training data CSV; its vocabularies define the schema.
    #[arg(long)]
    data: PathBuf,
    /// Class column name, or `last`.
    #[arg(long, default_value = "last")]
    target: String,
    /// Schema JSON (as written by `run`) fixing the level vocabularies.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl DataArg {
    fn load(&self) -> Result<Dataset> {
        let schema = match &self.schema {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?)
            }
            None => None,
        };
        self.load_with(schema.as_ref())
    }

    /// Loads the data encoded with the vocabularies the forest was trained
    /// on, unless `--schema` says otherwise.
    fn load_for(&self, forest: &Forest) -> Result<Dataset> {
        match (&self.schema, &forest.schema) {
            (None, Some(schema)) => self.load_with(Some(schema)),
            _ => self.load(),
        }
    }

    fn load_with(&self, schema: Option<&Schema>) -> Result<Dataset> {
        let target: Target = self.target.parse().unwrap_or(Target::Last);
        let ds = load_csv(&self.data, &target).with_context(|| format!("loading {}", self.data.display()))?;
        match schema {
            Some(schema) => ds
                .conform(schema)
                .with_context(|| format!("{} does not match the schema", self.data.display())),
            None => Ok(ds),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic XOR dataset.
    GenXor {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 840)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a forest on the data.
    Fit {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn every forest node into a rule with training metrics.
    Extract {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        forest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filter extracted rules into PSR and PSRS tables.
    Preselect {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        rules: PathBuf,
        /// Directory for psr.csv, psrs.csv, psr_coverage.bin.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        knobs: PreselectKnobs,
    },
    /// Choose the rule ensemble from the PSR table.
    Select {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        forest: PathBuf,
        #[arg(long)]
        psr: PathBuf,
        /// Solution JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write the selected rules as a metrics table.
        #[arg(long)]
        selected: Option<PathBuf>,
        #[command(flatten)]
        knobs: SelectKnobs,
    },
    /// Complementary rules for a selection.
    Enrich {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        psr: PathBuf,
        #[arg(long)]
        psrs: PathBuf,
        #[arg(long)]
        selection: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        knobs: EnrichKnobs,
    },
    /// Classify rows with a rule table.
    Predict {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        rules: PathBuf,
        /// Rows to classify; defaults to the training data.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Use the ordered list instead of the decision set.
        #[arg(long)]
        ordered: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a rule table against test data and the forest.
    Evaluate {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        forest: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated splits over several datasets.
    Benchmark {
        /// `name=path.csv`, repeatable.
        #[arg(long = "dataset", value_name = "NAME=PATH")]
        datasets: Vec<String>,
        /// Add generated XOR data with this many rows.
        #[arg(long)]
        xor: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Instances grouped by the exact set of rules covering them.
    ExportUpset {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        rules: PathBuf,
        /// JSON output; a combinations CSV goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the selection program in LP format.
    ExportLp {
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        forest: PathBuf,
        #[arg(long)]
        psr: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline on one split, all artifacts in the output directory.
    Run {
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_rules(path: &Path, ds: &Dataset) -> Result<Vec<RuleRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_metrics_csv(file, ds).with_context(|| format!("reading {}", path.display()))
}

fn load_forest(path: &Path) -> Result<Forest> {
    Forest::load(path).with_context(|| format!("loading {}", path.display()))
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum SolverArg {
    Auto,
    Exact,
    Heuristic,
    /// Write the program as LP to `--out` instead of solving.
    Export,
}

/// Per-call overrides of the `[select]` section.
#[derive(clap::Args)]
struct SelectKnobs {
    #[arg(long, allow_negative_numbers = true)]
    w0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    w3: Option<f64>,
    #[arg(long)]
    maxcover: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    maxoverlap: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SelectKnobs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        let solver = match self.solver {
            Some(SolverArg::Exact) => Some("exact"),
            Some(SolverArg::Heuristic) => Some("heuristic"),
            Some(SolverArg::Auto) => Some("auto"),
            Some(SolverArg::Export) | None => None,
        };
        override_each(
            cfg,
            [
                ("select.w0", text(self.w0)),
                ("select.w1", text(self.w1)),
                ("select.w2", text(self.w2)),
                ("select.w3", text(self.w3)),
                ("select.maxcover", text(self.maxcover)),
                ("select.maxoverlap", text(self.maxoverlap)),
                ("select.alpha", text(self.alpha)),
                ("select.beta", text(self.beta)),
                ("select.time_limit", text(self.time_limit)),
                ("select.solver", solver.map(String::from)),
                ("seed", text(self.seed)),
            ],
        )
    }
}

/// Per-call overrides of the `[preselect]` section.
#[derive(clap::Args)]
struct PreselectKnobs {
    #[arg(long, allow_negative_numbers = true)]
    min_conf: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    min_class_cov: Option<f64>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    max_simil: Option<f64>,
}

impl PreselectKnobs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        override_each(
            cfg,
            [
                ("preselect.min_conf", text(self.min_conf)),
                ("preselect.min_class_cov", text(self.min_class_cov)),
                ("preselect.max_len", text(self.max_len)),
                ("preselect.max_simil", text(self.max_simil)),
            ],
        )
    }
}

/// Per-call overrides of the `[enrich]` section.
#[derive(clap::Args)]
struct EnrichKnobs {
    #[arg(long, allow_negative_numbers = true)]
    arm_minsup: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    arm_minconf: Option<f64>,
}

impl EnrichKnobs {
    fn apply(&self, cfg: &mut PipelineConfig) -> Result<()> {
        override_each(
            cfg,
            [
                ("enrich.arm_minsup", text(self.arm_minsup)),
                ("enrich.arm_minconf", text(self.arm_minconf)),
            ],
        )
    }
}

fn text<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

/// Sets every given key through the config parser, then revalidates.
fn override_each<const N: usize>(cfg: &mut PipelineConfig, pairs: [(&str, Option<String>); N]) -> Result<()> {
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    Ok(cfg.validate()?)
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_ini_file(p).with_context(|| format!("config {}", p.display()))?,
        None => PipelineConfig::default(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    Ok(cfg)
}

fn problem_for(cfg: &PipelineConfig, train: &Dataset, forest: &Forest, psr: &[RuleRecord]) -> Result<SelectionProblem> {
    let exec = exec_of(cfg);
    let rules: Vec<_> = psr.iter().map(|r| r.rule.clone()).collect();
    let cov = build_coverage_with(&rules, train, exec);
    let metrics: Vec<_> = psr.iter().map(|r| r.metrics.clone()).collect();
    let init = initial_error(cfg.init_error, forest, train)?;
    let ids = psr.iter().map(|r| r.rule.id).collect();
    Ok(build_problem(&metrics, &cov, init, &cfg.select)?.with_rule_ids(ids)?)
}

fn classifier(rules: Vec<RuleRecord>, train: &Dataset, ordered: bool) -> Result<RuleClassifier> {
    if rules.is_empty() {
        bail!("rule table is empty");
    }
    Ok(if ordered {
        build_ordered_list(rules, train)?
    } else {
        RuleClassifier::decision_set(rules, train)
    })
}

fn print_table(rows: &[Vec<String>]) {
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for r in rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        println!("{}", line.join("  ").trim_end());
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let mut cfg = load_config(&cli)?;
    let exec = exec_of(&cfg);

    match &cli.command {
        Command::GenXor { seed, n, out } => {
            let ds = generate_xor(*seed, *n)?;
            ds.write_csv_to(create(out)?)?;
            println!("wrote {} rows to {}", ds.n(), out.display());
        }
        Command::Fit { data, out } => {
            let train = data.load()?;
            let mut params = cfg.forest.clone();
            params.seed = cfg.seed;
            let forest = train_forest_with(&train, &params, exec)?;
            forest.save(out)?;
            let leaves: usize = forest.trees.iter().map(|t| t.n_leaves()).sum();
            println!("{} trees, {} leaves -> {}", forest.trees.len(), leaves, out.display());
        }
        Command::Extract { data, forest, out } => {
            let forest = load_forest(forest)?;
            let train = data.load_for(&forest)?;
            let records = rule_records(extract_rules(&forest), &train, exec);
            write_metrics_csv(&records, &train, create(out)?)?;
            println!("{} rules -> {}", records.len(), out.display());
        }
        Command::Preselect {
            data,
            rules,
            out,
            knobs,
        } => {
            knobs.apply(&mut cfg)?;
            let train = data.load()?;
            let records = read_rules(rules, &train)?;
            let rules: Vec<_> = records.into_iter().map(|r| r.rule).collect();
            let pre = preselect_with(&rules, &train, &cfg.preselect, exec)?;
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            write_metrics_csv(&pre.psr, &train, create(&out.join("psr.csv"))?)?;
            write_metrics_csv(&pre.psrs, &train, create(&out.join("psrs.csv"))?)?;
            let mut w = create(&out.join("psr_coverage.bin"))?;
            pre.coverage.write_binary(&mut w)?;
            w.flush()?;
            let s = &pre.stats;
            println!(
                "{} in, {} after dedup, {} after length, {} after thresholds, {} kept, {} similar",
                s.input, s.after_dedup, s.after_length, s.after_thresholds, s.kept, s.similar
            );
        }
        Command::Select {
            data,
            forest,
            psr,
            out,
            selected,
            knobs,
        } => {
            knobs.apply(&mut cfg)?;
            let forest = load_forest(forest)?;
            let train = data.load_for(&forest)?;
            let psr = read_rules(psr, &train)?;
            let problem = problem_for(&cfg, &train, &forest, &psr)?;
            if knobs.solver == Some(SolverArg::Export) {
                let mut w = create(out)?;
                write_lp(&problem, &mut w)?;
                w.flush()?;
                println!("{} rules, {} instances -> {}", problem.m, problem.n, out.display());
                return Ok(());
            }
            cfg.solve.seed = cfg.seed;
            let sol = solve(&problem, &cfg.solve, exec)?;
            write_text(out, &sol.to_json()?)?;
            if let Some(path) = selected {
                let chosen: Vec<_> = sol.selected().into_iter().map(|j| psr[j].clone()).collect();
                write_metrics_csv(&chosen, &train, create(path)?)?;
            }
            println!(
                "{:?}: {} of {} rules, objective {:.4}, ids {:?}",
                sol.status,
                sol.selected_ids.len(),
                problem.m,
                sol.objective,
                sol.selected_ids
            );
            for v in &sol.violations {
                log::warn!("selection breaks a bound: {v}");
            }
        }
        Command::Enrich {
            data,
            psr,
            psrs,
            selection,
            out,
            knobs,
        } => {
            knobs.apply(&mut cfg)?;
            let train = data.load()?;
            let psr = read_rules(psr, &train)?;
            let psrs = read_rules(psrs, &train)?;
            let text =
                std::fs::read_to_string(selection).with_context(|| format!("reading {}", selection.display()))?;
            let sol = SelectionSolution::from_json(&text)?;
            let rows = enrich_selection(&psr, &psrs, &sol.selected_ids, &train, &cfg.enrich, exec)?;
            write_enriched_csv(&rows, &train, create(out)?)?;
            println!("{} complementary rules -> {}", rows.len(), out.display());
        }
        Command::Predict {
            data,
            rules,
            input,
            ordered,
            out,
        } => {
            let train = data.load()?;
            let clf = classifier(read_rules(rules, &train)?, &train, *ordered)?;
            let rows = match input {
                Some(p) => load_csv_like(p, &train.schema()).with_context(|| format!("loading {}", p.display()))?,
                None => train.clone(),
            };
            let pred = clf.predict(&rows);
            let mut w = csv::Writer::from_writer(create(out)?);
            w.write_record(["row", "prediction", "covered", "truth"])?;
            for i in 0..rows.n() {
                w.write_record([
                    (i + 1).to_string(),
                    train.class_levels()[pred.labels[i] as usize].clone(),
                    pred.covered[i].to_string(),
                    train.class_levels()[rows.label(i) as usize].clone(),
                ])?;
            }
            w.flush()?;
            if *ordered {
                let mut stdout = std::io::stdout().lock();
                write_ordered_list_csv(&clf, &train, &mut stdout)?;
            }
            println!("{} predictions -> {}", rows.n(), out.display());
        }
        Command::Evaluate {
            data,
            test,
            forest,
            rules,
            out,
        } => {
            let forest = load_forest(forest)?;
            let train = data.load_for(&forest)?;
            let test = load_csv_like(test, &train.schema()).with_context(|| format!("loading {}", test.display()))?;
            let rf_pred = predict_forest(&forest, &test)?;
            let records = read_rules(rules, &train)?;
            let set = report(&classifier(records.clone(), &train, false)?, &test, &rf_pred)?;
            let list = report(&classifier(records, &train, true)?, &test, &rf_pred)?;
            let doc = serde_json::json!({ Method::Ore.name(): set, Method::OreList.name(): list });
            let text = serde_json::to_string_pretty(&doc)?;
            match out {
                Some(p) => write_text(p, &text)?,
                None => println!("{text}"),
            }
            let rows = vec![
                ["", "accuracy", "coverage", "kappa", "fidelity"]
                    .map(String::from)
                    .to_vec(),
                row_of("decision set", &set),
                row_of("ordered list", &list),
            ];
            print_table(&rows);
        }
        Command::Benchmark { datasets, xor, out } => {
            let mut specs = Vec::new();
            for d in datasets {
                let (name, path) = d
                    .split_once('=')
                    .with_context(|| format!("dataset {d:?} is not name=path"))?;
                specs.push(DatasetSpec {
                    name: name.to_string(),
                    source: DataSource::Csv {
                        path: path.into(),
                        target: "last".into(),
                    },
                });
            }
            if let Some(n) = xor {
                specs.push(DatasetSpec {
                    name: "xor".into(),
                    source: DataSource::Xor(*n),
                });
            }
            let rep = run_benchmark(&cfg, &specs)?;
            std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            rep.write_rows_csv(create(&out.join("benchmark_rows.csv"))?)?;
            write_text(&out.join("benchmark_summary.json"), &rep.summary_json()?)?;
            let mut rows = vec![[
                "dataset", "method", "accuracy", "coverage", "fidelity", "rules", "length",
            ]
            .map(String::from)
            .to_vec()];
            for d in &rep.datasets {
                for m in Method::ALL {
                    let cell = |k: &str| {
                        d.get(m, k)
                            .map(|s| format!("{:.3} ± {:.3}", s.mean, s.se))
                            .unwrap_or_else(|| "-".into())
                    };
                    rows.push(vec![
                        d.dataset.clone(),
                        m.name().into(),
                        cell("accuracy"),
                        cell("coverage"),
                        cell("fidelity"),
                        cell("total_rules"),
                        cell("rule_length"),
                    ]);
                }
            }
            print_table(&rows);
            for (name, err) in &rep.failures {
                eprintln!("failed: {name}: {err}");
            }
            if rep.datasets.is_empty() {
                bail!("every dataset failed");
            }
        }
        Command::ExportUpset { data, rules, out } => {
            let train = data.load()?;
            let rules: Vec<_> = read_rules(rules, &train)?.into_iter().map(|r| r.rule).collect();
            let up = export_upset(&rules, &train)?;
            write_text(out, &up.to_json()?)?;
            let csv_path = out.with_extension("csv");
            up.write_combinations_csv(create(&csv_path)?)?;
            println!(
                "{} combinations -> {}, {}",
                up.combinations.len(),
                out.display(),
                csv_path.display()
            );
        }
        Command::ExportLp { data, forest, psr, out } => {
            let forest = load_forest(forest)?;
            let train = data.load_for(&forest)?;
            let psr = read_rules(psr, &train)?;
            let problem = problem_for(&cfg, &train, &forest, &psr)?;
            let mut w = create(out)?;
            write_lp(&problem, &mut w)?;
            w.flush()?;
            println!("{} rules, {} instances -> {}", problem.m, problem.n, out.display());
        }
        Command::Run { out } => {
            if let Some(dir) = out {
                cfg.output = dir.clone();
            }
            let run = run_pipeline(&cfg)?;
            let r = &run.round;
            println!(
                "{} rules extracted, {} preselected, {} selected ({:?}) -> {}",
                r.extracted.len(),
                r.preselection.psr.len(),
                r.selected.len(),
                r.solution.status,
                run.dir.display()
            );
            let mut rows = vec![["method", "accuracy", "coverage", "kappa", "fidelity"]
                .map(String::from)
                .to_vec()];
            for m in &r.reports {
                rows.push(row_of(m.method.name(), &m.report));
            }
            print_table(&rows);
            for p in &run.timing.phases {
                println!("{:<22} {:>10.1} ms", p.phase, p.ms);
            }
            println!("{:<22} {:>10.1} ms", "total", run.timing.total_ms);
        }
    }
    Ok(())
}

fn row_of(label: &str, r: &ruleforest::ensemble::EvaluationReport) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    vec![
        label.to_string(),
        format!("{:.3}", r.accuracy),
        format!("{:.3}", r.coverage),
        format!("{:.3}", r.kappa),
        opt(r.fidelity.all.overall),
    ]
}
