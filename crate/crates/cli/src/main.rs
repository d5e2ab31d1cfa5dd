//! `surplus`: run feature-importance methods on simulated or CSV data and
//! persist the results as JSON.
//!
//! Every command writes its artifact to `--out` plus a sidecar
//! `<out>.manifest.json` holding the fully resolved configuration.
//! Failures print `{"error": {...}}` to stderr; exit code 2 means the
//! configuration was rejected, 1 means the computation failed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use surplus::evaluation::{
    self, derive_ground_truth_with, rank_summary, run_grid, split_consistency, Grid, LearnerChoice, OracleConfig,
    Protocol,
};
use surplus::learner::{ExternalSpec, GbtParams};
use surplus::{Dataset, DgpId, DgpSpec, ImportanceReport, Method};

#[derive(Parser, Debug)]
#[command(name = "surplus", version, about = "Refit-based, selective feature importance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a simulated dataset as CSV.
    Simulate(SimulateArgs),
    /// Run one importance method on one dataset.
    Analyze(AnalyzeArgs),
    /// Score a method (or an existing report) against a simulated dataset's truth.
    Evaluate(EvaluateArgs),
    /// Mean angle between importances computed on random halves.
    Consistency(ConsistencyArgs),
    /// Every method on every simulated dataset; writes the comparison table.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct Common {
    /// Base seed; falls back to SURPLUS_SEED, then 0.
    #[arg(long, env = "SURPLUS_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DataArgs {
    /// Simulated dataset, DS1..DS6.
    #[arg(long, conflicts_with = "csv")]
    dataset: Option<String>,
    /// CSV file with a header row.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Target column of the CSV.
    #[arg(long, default_value = "y")]
    target: String,
    /// Rows to simulate.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Target noise standard deviation of the simulation.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum LearnerArg {
    Auto,
    Ols,
    Gbt,
}

#[derive(Args, Debug, Clone, Serialize)]
struct MethodArgs {
    /// Subsets sampled by SMSSM.
    #[arg(long, default_value_t = 200)]
    k: usize,
    /// Fraction of best subsets SMSSM keeps.
    #[arg(long, default_value_t = 0.25)]
    top_fraction: f64,
    /// LOCO resampling repeats.
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    /// MCR loss slack.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// MCR permutations per feature.
    #[arg(long, default_value_t = 20)]
    n_perms: usize,
    /// MCR candidate models.
    #[arg(long, default_value_t = 20)]
    k_models: usize,
    /// Learner used by the refit methods (auto: OLS on linear simulations, trees otherwise).
    #[arg(long, value_enum, default_value_t = LearnerArg::Gbt)]
    learner: LearnerArg,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 3)]
    depth: usize,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Keep negative weights when computing angles.
    #[arg(long)]
    no_clip: bool,
    /// Command line of an external learner process (overrides --learner).
    #[arg(long)]
    external_cmd: Option<String>,
}

impl MethodArgs {
    fn protocol(&self) -> Protocol {
        let learner = match (&self.external_cmd, self.learner) {
            (Some(cmd), _) => LearnerChoice::External(ExternalSpec::from_command_line(cmd)),
            (None, LearnerArg::Auto) => LearnerChoice::Auto,
            (None, LearnerArg::Ols) => LearnerChoice::Ols,
            (None, LearnerArg::Gbt) => LearnerChoice::Gbt,
        };
        Protocol {
            k: self.k,
            top_fraction: self.top_fraction,
            repeats: self.repeats,
            folds: self.folds,
            delta: self.delta,
            n_perms: self.n_perms,
            k_models: self.k_models,
            gbt: GbtParams {
                n_rounds: self.rounds,
                max_depth: self.depth,
                learning_rate: self.lr,
                subsample: 1.0,
            },
            learner,
            clip: !self.no_clip,
        }
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "smssm")]
    method: String,
    #[command(flatten)]
    opts: MethodArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "smssm")]
    method: String,
    /// Score this report instead of running the method.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Rows used by the ground-truth oracle.
    #[arg(long, default_value_t = 20_000)]
    oracle_n: usize,
    #[command(flatten)]
    opts: MethodArgs,
}

#[derive(Args, Debug)]
struct ConsistencyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "smssm")]
    method: String,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[command(flatten)]
    opts: MethodArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Number of seeds (seed, seed+1, ...).
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Comma-separated dataset ids.
    #[arg(long, default_value = "DS1,DS2,DS3,DS4,DS5,DS6")]
    datasets: String,
    /// Comma-separated methods.
    #[arg(long, default_value = "SMSSM,LOCO,MCR,ConstantReplacement,Gain")]
    methods: String,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 20_000)]
    oracle_n: usize,
    #[command(flatten)]
    opts: MethodArgs,
}

/// Error raised before any computation starts.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("config", &e.to_string(), 2),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let is_config = e.downcast_ref::<ConfigError>().is_some()
                || matches!(e.downcast_ref::<surplus::Error>(), Some(surplus::Error::Validation(_)));
            let msg = format!("{e:#}");
            if is_config {
                fail("config", &msg, 2)
            } else {
                fail("runtime", &msg, 1)
            }
        }
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    eprintln!("{}", json!({"error": {"kind": kind, "message": message.trim_end()}}));
    ExitCode::from(code)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Simulate(a) => &a.common,
        Command::Analyze(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::Consistency(a) => &a.common,
        Command::Compare(a) => &a.common,
    };
    if common.jobs < 1 {
        return Err(config_err("--jobs must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build_global()
        .context("starting worker pool")?;

    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Consistency(a) => consistency(a),
        Command::Compare(a) => compare(a),
    }
}

enum Source {
    Simulated(DgpSpec),
    Csv(PathBuf, String),
}

impl Source {
    fn resolve(data: &DataArgs, seed: u64) -> anyhow::Result<Source> {
        match (&data.dataset, &data.csv) {
            (Some(_), Some(_)) => Err(config_err("give either --dataset or --csv, not both")),
            (None, None) => Err(config_err("a dataset source is required: --dataset DSk or --csv PATH")),
            (Some(id), None) => {
                let id: DgpId = id.parse()?;
                let spec = DgpSpec::new(id, data.n, seed).with_noise(data.noise);
                spec.validate()?;
                Ok(Source::Simulated(spec))
            }
            (None, Some(path)) => Ok(Source::Csv(path.clone(), data.target.clone())),
        }
    }

    fn dgp(&self) -> Option<DgpId> {
        match self {
            Source::Simulated(s) => Some(s.id),
            Source::Csv(..) => None,
        }
    }

    fn load(&self) -> anyhow::Result<Dataset> {
        Ok(match self {
            Source::Simulated(s) => s.generate()?,
            Source::Csv(path, target) => Dataset::load_csv(path, target)?,
        })
    }

    fn describe(&self) -> Value {
        match self {
            Source::Simulated(s) => json!({"simulated": s}),
            Source::Csv(path, target) => json!({"csv": path, "target": target}),
        }
    }
}

fn parse_method(s: &str) -> anyhow::Result<Method> {
    s.parse::<Method>().map_err(|e| config_err(e.to_string()))
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(out: &Path, command: &str, seed: u64, jobs: usize, config: Value) -> anyhow::Result<()> {
    let manifest = json!({
        "tool": "surplus",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "seed": seed,
        "jobs": jobs,
        "config": config,
        "output": out,
    });
    write_json(&manifest_path(out), &manifest)
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let Source::Simulated(spec) = Source::resolve(&a.data, a.common.seed)? else {
        return Err(config_err("simulate needs --dataset"));
    };
    let out = out_path(&a.common, &format!("{}.csv", spec.id));
    let ds = spec.generate()?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    ds.write_csv(&out, &a.data.target)?;
    write_manifest(&out, "simulate", a.common.seed, a.common.jobs, json!({"dgp": spec, "target": a.data.target}))?;
    println!("wrote {} ({} rows, {} features)", out.display(), ds.n(), ds.p());
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> anyhow::Result<()> {
    let source = Source::resolve(&a.data, a.common.seed)?;
    let method = parse_method(&a.method)?;
    let cfg = a.opts.protocol().method_config(method, source.dgp(), a.common.seed);
    let out = out_path(&a.common, "report.json");
    let ds = source.load()?;
    cfg.validate(&ds)?;
    write_manifest(
        &out,
        "analyze",
        a.common.seed,
        a.common.jobs,
        json!({"data": source.describe(), "method": cfg}),
    )?;
    let report = cfg.run(&ds)?;
    write_json(&out, &report)?;
    print_phi(&report);
    Ok(())
}

fn print_phi(report: &ImportanceReport) {
    println!("{} ({} model evaluations)", report.method, report.n_models_fit);
    for (name, v) in report.feature_names.iter().zip(&report.phi) {
        println!("  {name:>12}  {v:+.6}");
    }
}

fn evaluate(a: EvaluateArgs) -> anyhow::Result<()> {
    let source = Source::resolve(&a.data, a.common.seed)?;
    let Source::Simulated(spec) = &source else {
        return Err(config_err("evaluate needs a simulated --dataset (ground truth is unknown for CSV data)"));
    };
    let protocol = a.opts.protocol();
    let out = out_path(&a.common, "evaluation.json");
    let oracle_cfg = OracleConfig {
        n: a.oracle_n,
        ..OracleConfig::default()
    };
    let method_cfg = match &a.report {
        Some(_) => None,
        None => Some(protocol.method_config(parse_method(&a.method)?, Some(spec.id), a.common.seed)),
    };
    let ds = match &method_cfg {
        Some(cfg) => {
            let ds = source.load()?;
            cfg.validate(&ds)?;
            Some(ds)
        }
        None => None,
    };
    write_manifest(
        &out,
        "evaluate",
        a.common.seed,
        a.common.jobs,
        json!({"data": source.describe(), "method": method_cfg, "report": a.report, "oracle": oracle_cfg, "clip": protocol.clip}),
    )?;

    let report: ImportanceReport = match (&a.report, &method_cfg) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?
        }
        (None, Some(cfg)) => cfg.run(ds.as_ref().expect("loaded with the config"))?,
        (None, None) => unreachable!(),
    };
    if report.phi.len() != spec.id.p() {
        return Err(config_err(format!(
            "report has {} features but {} has {}",
            report.phi.len(),
            spec.id,
            spec.id.p()
        )));
    }
    let oracle = derive_ground_truth_with(spec, &oracle_cfg)?;
    let angle = evaluation::angle_score(&report.phi, &oracle.weights.phi, protocol.clip)?;
    let selective = evaluation::selective_ratio(&report.phi, &oracle.true_set)?;
    let result = json!({
        "dataset": spec.id,
        "method": report.method,
        "phi": report.phi,
        "oracle_weights": oracle.weights.phi,
        "true_set": oracle.true_set,
        "angle": angle,
        "selective_ratio": selective,
        "table_metric": evaluation::MetricKind::for_dgp(spec.id),
    });
    write_json(&out, &result)?;
    println!("angle {:.4}  selective_ratio {:.4}", angle.value, selective.value);
    Ok(())
}

fn consistency(a: ConsistencyArgs) -> anyhow::Result<()> {
    let source = Source::resolve(&a.data, a.common.seed)?;
    let method = parse_method(&a.method)?;
    let protocol = a.opts.protocol();
    let cfg = protocol.method_config(method, source.dgp(), a.common.seed);
    let out = out_path(&a.common, "consistency.json");
    let ds = source.load()?;
    cfg.validate(&ds)?;
    write_manifest(
        &out,
        "consistency",
        a.common.seed,
        a.common.jobs,
        json!({"data": source.describe(), "method": cfg, "trials": a.trials, "clip": protocol.clip}),
    )?;
    let r = split_consistency(&ds, &cfg, a.trials, a.common.seed, protocol.clip)?;
    write_json(&out, &json!({"method": method, "trials": a.trials, "result": r}))?;
    println!("mean angle {:.4} over {} trials", r.mean_angle, r.angles.len());
    Ok(())
}

fn compare(a: CompareArgs) -> anyhow::Result<()> {
    let datasets = a
        .datasets
        .split(',')
        .map(|s| s.parse::<DgpId>().map_err(|e| config_err(e.to_string())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let methods = a.methods.split(',').map(parse_method).collect::<anyhow::Result<Vec<_>>>()?;
    if a.seeds < 1 {
        return Err(config_err("--seeds must be >= 1"));
    }
    let mut grid = Grid::new(a.n, (a.common.seed..a.common.seed + a.seeds).collect());
    grid.datasets = datasets;
    grid.methods = methods;
    grid.noise_scale = a.noise;
    grid.protocol = a.opts.protocol();
    grid.oracle.n = a.oracle_n;
    for &d in &grid.datasets {
        let spec = DgpSpec::new(d, grid.n, 0).with_noise(grid.noise_scale);
        spec.validate()?;
        let ds = spec.generate()?;
        for &m in &grid.methods {
            grid.protocol.method_config(m, Some(d), 0).validate(&ds)?;
        }
    }

    let out = out_path(&a.common, "compare.json");
    write_manifest(&out, "compare", a.common.seed, a.common.jobs, json!({"grid": grid}))?;
    let result = run_grid(&grid)?;
    let ranks = rank_summary(&result.table).ok();
    let failures: Vec<&String> = result.runs.iter().filter_map(|r| r.error.as_ref()).collect();
    write_json(
        &out,
        &json!({
            "table": result.table,
            "ranks": ranks,
            "oracle_weights": result.oracle_weights,
            "failures": failures,
        }),
    )?;
    let text = result.table.to_text();
    let mut txt = out.as_os_str().to_owned();
    txt.push(".txt");
    fs::write(PathBuf::from(txt), &text)?;
    print!("{text}");
    if let Some(ranks) = ranks {
        for r in ranks {
            println!("{:>20}  mean rank {:.2}  best {}  worst {}", r.method, r.mean_rank, r.best, r.worst);
        }
    }
    if !failures.is_empty() {
        anyhow::bail!("{} runs failed; first: {}", failures.len(), failures[0]);
    }
    Ok(())
}
