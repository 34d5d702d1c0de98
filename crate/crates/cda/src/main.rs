#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cda::config::{Axis, AxisValue, ScenarioConfig, SCHEMA_VERSION};
use cda::experiments::{self, Progress, ReportRow};
use cda::{io, CliError};
use cda_core::augment::DEFAULT_MAX_POINTS;
use cda_core::kernels::KernelSpec;
use cda_core::metrics::{self, MetricConfig};
use cda_core::scm::{ScmConfig, ScmModel};
use cda_core::seed::derive;
use cda_core::{MechanismKind, WeightedTable};

fn long_version() -> &'static str {
    Box::leak(
        format!(
            "{} (cda-core {}, scenario-config schema {})",
            cda::VERSION,
            cda_core::VERSION,
            SCHEMA_VERSION
        )
        .into_boxed_str(),
    )
}

/// Causal data augmentation for tabular data.
#[derive(Debug, Parser)]
#[command(name = "cda", version = long_version(), propagate_version = true)]
struct Cli {
    /// Worker threads for sweeps (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a dataset from a random structural causal model.
    Generate(GenerateArgs),
    /// Augment a dataset under a causal graph.
    Augment(AugmentArgs),
    /// Compare two tables (dataset or augmented CSV) column by column.
    Metrics(MetricsArgs),
    /// Run one repetition of the benchmark pipeline.
    Bench(BenchArgs),
    /// Run a scenario sweep from a config file.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct ScmArgs {
    /// Number of variables.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Expected node degree of the random graph.
    #[arg(long, default_value_t = 3.0)]
    degree: f64,
    #[arg(long, default_value = "neural_net")]
    mechanism: MechanismKind,
    /// Noise amplitude.
    #[arg(long, default_value_t = 0.4)]
    noise: f64,
    /// Number of rows.
    #[arg(long, default_value_t = 300)]
    n: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    scm: ScmArgs,
    #[arg(long)]
    seed: u64,
    /// Dataset CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Model JSON to write.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Graph JSON to write.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Pruning threshold in [0, 1).
    #[arg(long)]
    theta: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Reference table.
    #[arg(long)]
    reference: PathBuf,
    /// Table compared against the reference.
    #[arg(long)]
    other: PathBuf,
    #[arg(long, default_value_t = 512)]
    kl_grid_size: usize,
    /// Report JSON to write; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    scm: ScmArgs,
    #[arg(long, default_value_t = 1e-2)]
    theta: f64,
    #[arg(long, default_value_t = 0.0)]
    outlier_fraction: f64,
    /// Master seed.
    #[arg(long)]
    seed: u64,
    /// Repetition index within the master seed.
    #[arg(long, default_value_t = 0)]
    rep: usize,
    /// Skip the learners and report only augmentation and distribution metrics.
    #[arg(long)]
    no_learners: bool,
    /// Report CSV to write; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.csv and summary.json.
    #[arg(long)]
    out: PathBuf,
}

/// Writes to stdout, treating a closed pipe as success.
fn print_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

fn eprint_json(value: &serde_json::Value) {
    let _ = writeln!(std::io::stderr(), "{value}");
}

fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let s = &args.scm;
    let config = ScmConfig::new(s.d, s.degree, s.mechanism, s.noise);
    let sample_seed = derive(args.seed, 4);
    eprint_json(&json!({ "seed_lineage": {
        "seed": args.seed,
        "graph": derive(args.seed, 1),
        "mechanisms": derive(args.seed, 2),
        "sources": derive(args.seed, 3),
        "sample": sample_seed,
    }}));
    let model = ScmModel::generate(&config, args.seed)?;
    let data = model.sample(s.n, sample_seed)?;
    io::write_dataset(&args.out, &data)?;
    if let Some(path) = &args.model_out {
        io::write_json(path, &model.to_record())?;
    }
    if let Some(path) = &args.graph_out {
        io::write_json(path, &model.graph().to_file())?;
    }
    Ok(())
}

fn augment(args: &AugmentArgs) -> Result<(), CliError> {
    eprint_json(&json!({ "seed_lineage": {} }));
    let data = io::read_dataset(&args.data)?;
    let graph = io::read_graph(&args.graph)?;
    if graph.node_count() != data.n_cols() {
        return Err(CliError::invalid(format!(
            "graph has {} nodes but the dataset has {} columns",
            graph.node_count(),
            data.n_cols()
        )));
    }
    let specs = KernelSpec::fit(&data, &graph)?;
    let aug = cda_core::augment(&data, &graph, args.theta, &specs, args.max_points)?;
    io::write_augmented(&args.out, &aug)?;
    print_stdout(&format!(
        "{}\n",
        serde_json::to_string(&aug.stats()).expect("stats serialize")
    ))
}

fn read_table(path: &Path) -> Result<Box<dyn WeightedTable>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let header = text.lines().next().unwrap_or_default();
    if header.ends_with(",weight,provenance") {
        Ok(Box::new(
            io::read_augmented_from(text.as_bytes()).map_err(|e| e.context(path))?,
        ))
    } else {
        Ok(Box::new(
            io::read_dataset_from(text.as_bytes()).map_err(|e| e.context(path))?,
        ))
    }
}

fn metrics_cmd(args: &MetricsArgs) -> Result<(), CliError> {
    eprint_json(&json!({ "seed_lineage": {} }));
    let reference = read_table(&args.reference)?;
    let other = read_table(&args.other)?;
    let config = MetricConfig {
        kl_grid_size: args.kl_grid_size,
        ..MetricConfig::default()
    };
    let report = metrics::compare(reference.as_ref(), other.as_ref(), &config)?;
    match &args.out {
        Some(path) => io::write_json(path, &report),
        None => print_stdout(&format!(
            "{}\n",
            serde_json::to_string_pretty(&report).expect("report serializes")
        )),
    }
}

fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let s = &args.scm;
    let mut config = ScenarioConfig::new(Axis::Theta, args.seed);
    config.axis_values = Some(vec![AxisValue::Number(args.theta)]);
    config.defaults.d = s.d;
    config.defaults.expected_degree = s.degree;
    config.defaults.mechanism = s.mechanism;
    config.defaults.noise_amplitude = s.noise;
    config.defaults.n_samples = s.n;
    config.defaults.theta = args.theta;
    config.defaults.outlier_fraction = args.outlier_fraction;
    config.defaults.repetitions = args.rep + 1;
    config.evaluate_learners = !args.no_learners;
    config.validate()?;
    let lineage = experiments::SeedLineage::new(args.seed, args.rep);
    eprint_json(&json!({ "seed_lineage": lineage }));
    let rows = experiments::run_repetition(&config, 0, AxisValue::Number(args.theta), args.rep)?;
    let mut buf = Vec::new();
    {
        let mut wtr = csv::Writer::from_writer(&mut buf);
        wtr.write_record(ReportRow::HEADER).map_err(CliError::csv)?;
        for row in &rows {
            wtr.write_record(row.fields()).map_err(CliError::csv)?;
        }
        wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    match &args.out {
        Some(path) => std::fs::write(path, &buf).map_err(|e| CliError::io(path, e)),
        None => print_stdout(&String::from_utf8(buf).expect("csv is utf-8")),
    }
}

fn sweep(args: &SweepArgs, threads: usize) -> Result<(), CliError> {
    let config = ScenarioConfig::from_file(&args.config).map_err(|e| e.context(&args.config))?;
    eprint_json(&json!({ "seed_lineage": {
        "master": config.master_seed,
        "repetitions": (0..config.defaults.repetitions)
            .map(|r| experiments::SeedLineage::new(config.master_seed, r))
            .collect::<Vec<_>>(),
    }}));
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let report = experiments::run_sweep(&config, threads, |p: Progress| {
        eprintln!(
            "[{}/{}] {}={} rep {} done in {:.2}s",
            p.done, p.total, config.axis, p.axis_value, p.repetition, p.wall_time_s
        );
    })?;
    let csv_path = args.out.join("report.csv");
    std::fs::write(&csv_path, report.csv_string()).map_err(|e| CliError::io(&csv_path, e))?;
    io::write_json(&args.out.join("summary.json"), &report.summary())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Augment(a) => augment(a),
        Command::Metrics(a) => metrics_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Sweep(a) => sweep(a, threads),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprint_json(&e.to_json());
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
