//! Command-line front end: `discover`, `sweep` and `evaluate`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use placeminer::fitness::{FitnessMetric, Threshold};
use placeminer::log::{CsvColumns, EventLog};
use placeminer::run::{self, SweepGrid, DEFAULT_SWEEP_BUDGET};
use placeminer::selection::{AdaptKind, DiscoveryConfig};
use placeminer::tree::OrderingKind;

#[derive(Parser)]
#[command(name = "placeminer", version, about = "Discover Petri nets from event logs by pruned place search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a net and write model.pnml, model.dot, report.json, selection.jsonl
    Discover(DiscoverArgs),
    /// Run every combination of the given parameter lists and write a CSV
    Sweep(SweepArgs),
    /// Score an existing PNML net against a log
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct LogArgs {
    /// Event log (.xes, .csv or .json)
    #[arg(long)]
    log: PathBuf,
    /// CSV case id column
    #[arg(long, default_value = "case")]
    case_column: String,
    /// CSV activity column
    #[arg(long, default_value = "activity")]
    activity_column: String,
    /// CSV ordering column
    #[arg(long, default_value = "order")]
    order_column: String,
}

impl LogArgs {
    fn read(&self) -> Result<EventLog> {
        let columns = CsvColumns {
            case: self.case_column.clone(),
            activity: self.activity_column.clone(),
            order: self.order_column.clone(),
        };
        EventLog::read_path(&self.log, &columns).with_context(|| format!("reading {}", self.log.display()))
    }
}

fn fraction(s: &str) -> Result<Threshold, String> {
    Threshold::parse(s).map_err(|e| e.to_string())
}

/// Queue size; `None` means unbounded.
#[derive(Clone, Copy)]
struct QueueLimit(Option<usize>);

fn queue_limit(s: &str) -> Result<QueueLimit, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "unlimited" | "inf" | "none" => Ok(QueueLimit(None)),
        n => match n.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("`{s}` is not a positive integer or `unlimited`")),
            Ok(n) => Ok(QueueLimit(Some(n))),
        },
    }
}

fn steepness(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(0) | Err(_) => Err(format!("`{s}` is not a positive integer")),
        Ok(n) => Ok(n),
    }
}

fn depth(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 2 => Ok(n),
        _ => Err(format!("`{s}` is not an integer of at least 2")),
    }
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Noise threshold τ in [0, 1]
    #[arg(long, default_value = "0.6", value_parser = fraction)]
    tau: Threshold,
    /// Maximal share δ of replayable traces one place may cost
    #[arg(long, default_value = "0.15", value_parser = fraction)]
    delta: Threshold,
    #[arg(long, default_value = "combined")]
    metric: FitnessMetric,
    /// noDelta, constant, linear or sigmoid
    #[arg(long, default_value = "sigmoid")]
    adapt: AdaptKind,
    #[arg(long, default_value = "3", value_parser = steepness)]
    steepness: u32,
    /// Potential places queue size, or `unlimited`
    #[arg(long, default_value = "1000", value_parser = queue_limit)]
    queue_limit: QueueLimit,
    /// Extra queue passes at artificial depths after traversal (d⁺)
    #[arg(long, default_value_t = 0)]
    extra_depth: usize,
    /// Depth cutoff d_cut: maximal activities per place
    #[arg(long, default_value = "5", value_parser = depth)]
    max_depth: usize,
    /// Candidate ordering: lex or freq
    #[arg(long, default_value = "lex")]
    order: OrderingKind,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl DiscoverArgs {
    fn config(&self) -> DiscoveryConfig {
        DiscoveryConfig {
            tau: self.tau,
            delta: self.delta,
            metric: self.metric,
            adapt: self.adapt,
            steepness: self.steepness,
            queue_limit: self.queue_limit.0,
            d_plus: self.extra_depth,
            d_cut: self.max_depth,
            ordering: self.order,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    log: LogArgs,
    /// Use the full 8400-combination reference grid; list flags are ignored
    #[arg(long)]
    reference_grid: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.6", value_parser = fraction)]
    tau: Vec<Threshold>,
    #[arg(long, value_delimiter = ',', default_value = "0.15", value_parser = fraction)]
    delta: Vec<Threshold>,
    #[arg(long, value_delimiter = ',', default_value = "combined")]
    metric: Vec<FitnessMetric>,
    #[arg(long, value_delimiter = ',', default_value = "sigmoid")]
    adapt: Vec<AdaptKind>,
    #[arg(long, value_delimiter = ',', default_value = "3", value_parser = steepness)]
    steepness: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1000", value_parser = queue_limit)]
    queue_limit: Vec<QueueLimit>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    extra_depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5", value_parser = depth)]
    max_depth: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "lex")]
    order: Vec<OrderingKind>,
    /// Refuse grids with more combinations than this
    #[arg(long, default_value_t = DEFAULT_SWEEP_BUDGET)]
    budget: usize,
    /// CSV output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SweepArgs {
    fn grid(&self) -> SweepGrid {
        if self.reference_grid {
            return SweepGrid::reference();
        }
        SweepGrid {
            taus: self.tau.clone(),
            deltas: self.delta.clone(),
            metrics: self.metric.clone(),
            adapts: self.adapt.clone(),
            steepness: self.steepness.clone(),
            queue_limits: self.queue_limit.iter().map(|q| q.0).collect(),
            d_plus: self.extra_depth.clone(),
            d_cut: self.max_depth.clone(),
            orderings: self.order.clone(),
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// PNML net
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    log: LogArgs,
    /// Report file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing to standard output"),
    }
}

fn discover(args: &DiscoverArgs) -> Result<()> {
    let log = args.log.read()?;
    let d = run::discover(&log, &args.config())?;
    d.write_artifacts(&args.out)?;
    eprintln!(
        "{} places, {}/{} traces replayable, hm {:.4}; written to {}",
        d.net.places().len(),
        d.replayable_traces(),
        d.log.trace_count(),
        d.quality.hm,
        args.out.display()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let log = args.log.read()?;
    let rows = run::sweep(&log, &args.grid(), args.budget)?;
    let mut csv = Vec::new();
    run::write_sweep_csv(&rows, &mut csv)?;
    write_output(args.out.as_deref(), &csv)
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let log = args.log.read()?;
    let pnml = fs::read(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let report = run::evaluate(&pnml, &log).with_context(|| format!("evaluating {}", args.model.display()))?;
    write_output(args.out.as_deref(), report.to_json_pretty()?.as_bytes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Discover(a) => discover(a),
        Command::Sweep(a) => sweep(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
