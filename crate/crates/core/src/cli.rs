//! Command-line entry point.
//!
//! Every subcommand prints one JSON line on stdout; logs go to stderr and are
//! filtered by `OENS_LOG` (`error`, `info`, `debug`).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::datasets::{gen_ambiguous, gen_clustered_classes, load_csv, write_csv, ClusteredParams, Dataset};
use crate::engine::random_gradcheck;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::harness::{
    run_cell, run_experiment, specialization_report, write_run_dir, Cell, DatasetDescriptor, ExperimentConfig,
    RunConfig,
};
use crate::parallel;
use crate::trainers::{evaluate, Method};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "oens", version, about = "Train and evaluate oracle-loss ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one ensemble and write its checkpoint, history and record.
    Train(TrainArgs),
    /// Oracle metrics of a checkpoint on a dataset's test split.
    Eval(EvalArgs),
    /// Run an experiment sweep.
    Sweep(SweepArgs),
    /// Randomized finite-difference check of the analytic gradients.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset as CSV plus a stats sidecar.
    GenData(GenDataArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset descriptor (`.json`) or CSV file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Test CSV when `--data` is a CSV; defaults to `--data`.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run or sweep config JSON; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub members: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub probe_size: Option<usize>,
    /// Checkpoint to start from instead of a fresh initialization.
    #[arg(long)]
    pub init_from: Option<PathBuf>,
    /// Output directory; defaults to the config's `output_dir`, then `oens-train`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ensemble: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed used to materialize synthetic descriptors.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub probe_size: usize,
    /// Write the per-class winner distribution to this file.
    #[arg(long)]
    pub specialization: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Replace the replicate seeds with this single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Ambiguous,
    Clustered,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    pub generator: Generator,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub input_dim: usize,
    /// Mode priors of the ambiguous generator.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
    pub priors: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Number of confusable pairs (0,1), (2,3), ...
    #[arg(long, default_value_t = 3)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0.3)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub center_scale: f64,
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::GenData(a) => cmd_gen_data(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("OENS_LOG", "info");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn print_line(value: serde_json::Value) {
    println!("{value}");
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Descriptor plus the directory its relative paths resolve against.
fn descriptor_from(args: &DataArgs) -> Result<Option<(DatasetDescriptor, PathBuf)>> {
    let Some(data) = &args.data else { return Ok(None) };
    if data.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(data).map_err(|e| Error::io(format!("reading {}", data.display()), e))?;
        return Ok(Some((serde_json::from_str(&text)?, parent_dir(data))));
    }
    let descriptor = DatasetDescriptor::Csv {
        train: data.clone(),
        test: args.test_data.clone().unwrap_or_else(|| data.clone()),
        label_column: args.label_column.clone(),
    };
    Ok(Some((descriptor, PathBuf::from("."))))
}

fn cmd_train(args: TrainArgs) -> Result<u8> {
    let (mut run, base) = match &args.config {
        Some(path) => (RunConfig::from_file(path)?, parent_dir(path)),
        None => (RunConfig::default(), PathBuf::from(".")),
    };
    let t = &mut run.train;
    if let Some(v) = args.method {
        t.method = v;
    }
    if let Some(v) = args.members {
        t.member_count = v;
    }
    if let Some(v) = args.k {
        t.winners_per_example = v;
    }
    if let Some(v) = args.iterations {
        t.total_iterations = v;
    }
    if let Some(v) = args.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = args.lr {
        t.optimizer.learning_rate = v;
    }
    if let Some(v) = args.seed {
        t.seed = v;
    }
    if let Some(v) = args.probe_size {
        run.probe_size = v;
    }
    if let Some(v) = args.jobs {
        run.jobs = v;
    }
    run.train.validate()?;
    let (dataset, data_root) = match descriptor_from(&args.data)? {
        Some(found) => found,
        None => match run.dataset.clone() {
            Some(d) => (d, base.clone()),
            None => return Err(Error::InvalidConfig("no dataset: pass --data or set `dataset` in --config".into())),
        },
    };
    let out = args
        .out
        .or_else(|| run.output_dir.as_ref().map(|d| if d.is_absolute() { d.clone() } else { base.join(d) }))
        .unwrap_or_else(|| PathBuf::from("oens-train"));
    let init = args.init_from.as_deref().map(Ensemble::load).transpose()?;

    let config = run.train.clone();
    let cell = Cell {
        method: config.method,
        members: config.member_count,
        k: config.winners_per_example,
        seed: config.seed,
    };
    let splits = dataset.materialize(config.seed, run.probe_size, &data_root)?;
    let result = parallel::with_jobs(run.jobs, || {
        run_cell(cell, config, &dataset, run.probe_size, &data_root, &splits, init)
    })?;
    write_run_dir(&result, &out)?;
    log::info!("wrote {}", out.display());
    print_line(json!({
        "command": "train",
        "cell": cell.id(),
        "out": out,
        "wall_clock_seconds": result.record.wall_clock_seconds,
        "report": result.record.report,
    }));
    Ok(EXIT_OK)
}

fn eval_set(args: &EvalArgs) -> Result<Dataset> {
    let Some(data) = &args.data.data else {
        return Err(Error::InvalidConfig("eval needs --data".into()));
    };
    if data.extension().is_some_and(|e| e == "json") {
        let (descriptor, root) = descriptor_from(&args.data)?.expect("data given");
        return Ok(descriptor.materialize(args.seed, args.probe_size, &root)?.test);
    }
    Ok(load_csv(data, &args.data.label_column)?.with_split_tag("test"))
}

fn cmd_eval(args: EvalArgs) -> Result<u8> {
    let ensemble = Ensemble::load(&args.ensemble)?;
    let test = eval_set(&args)?;
    if test.input_dim() != ensemble.input_dim() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} input features, data has {}",
            ensemble.input_dim(),
            test.input_dim()
        )));
    }
    let report = parallel::with_jobs(args.jobs, || evaluate(&ensemble, &test))?;
    if let Some(path) = &args.specialization {
        let label = args.ensemble.display().to_string();
        let spec = specialization_report(label, None, &report)?;
        fs::write(path, serde_json::to_vec_pretty(&spec)?)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    print_line(serde_json::to_value(&report)?);
    Ok(EXIT_OK)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    let mut config = ExperimentConfig::from_file(&args.config)?;
    let base = parent_dir(&args.config);
    if let Some(seed) = args.seed {
        config.replicate_seeds = vec![seed];
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    let cwd = std::env::current_dir().map_err(|e| Error::io("reading the working directory", e))?;
    let out = match (args.out, &config.output_dir) {
        (Some(o), _) => cwd.join(o),
        (None, Some(d)) => base.join(d),
        (None, None) => cwd.join("oens-sweep"),
    };
    config.output_dir = Some(if out.is_absolute() { out.clone() } else { cwd.join(&out) });
    let outcome = run_experiment(&config, &base)?;
    let failed: Vec<_> = outcome
        .failures
        .iter()
        .map(|f| json!({"cell": f.cell.id(), "error": f.error}))
        .collect();
    print_line(json!({
        "command": "sweep",
        "cells": outcome.records.len() + outcome.failures.len(),
        "completed": outcome.records.len(),
        "failed": failed,
        "out": out,
    }));
    Ok(if outcome.failures.is_empty() { EXIT_OK } else { EXIT_PARTIAL })
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<u8> {
    if args.trials == 0 || args.tolerance.is_nan() || args.tolerance <= 0.0 {
        return Err(Error::InvalidConfig("--trials and --tolerance must be positive".into()));
    }
    let summary = random_gradcheck(args.trials, args.seed)?;
    let passed = summary.max_relative_error <= args.tolerance;
    let mut line = serde_json::to_value(&summary)?;
    line["command"] = json!("gradcheck");
    line["tolerance"] = json!(args.tolerance);
    line["passed"] = json!(passed);
    print_line(line);
    Ok(if passed { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_gen_data(args: GenDataArgs) -> Result<u8> {
    let (dataset, params) = match args.generator {
        Generator::Ambiguous => (
            gen_ambiguous(args.seed, args.n, args.input_dim, &args.priors)?,
            json!({"input_dim": args.input_dim, "mode_priors": args.priors}),
        ),
        Generator::Clustered => {
            let params = ClusteredParams {
                input_dim: args.input_dim,
                class_count: args.classes,
                cluster_spread: args.spread,
                confusable_pairs: (0..args.pairs).map(|p| (2 * p, 2 * p + 1)).collect(),
                pair_separation: args.separation,
                center_scale: args.center_scale,
            };
            (gen_clustered_classes(args.seed, args.n, &params)?, serde_json::to_value(&params)?)
        }
    };
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    write_csv(&dataset, &args.out)?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".stats.json");
    let sidecar = PathBuf::from(sidecar);
    let stats = crate::datasets::FeatureStats::from_inputs(dataset.inputs());
    let body = json!({
        "generator": format!("{:?}", args.generator).to_lowercase(),
        "seed": args.seed,
        "rows": dataset.len(),
        "class_count": dataset.class_count(),
        "class_counts": dataset.class_counts(),
        "params": params,
        "feature_mean": stats.mean,
    });
    fs::write(&sidecar, serde_json::to_vec_pretty(&body)?)
        .map_err(|e| Error::io(format!("writing {}", sidecar.display()), e))?;
    print_line(json!({"command": "gen-data", "out": args.out, "stats": sidecar, "rows": dataset.len()}));
    Ok(EXIT_OK)
}
