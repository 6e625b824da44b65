//! `hwnas`: hardware-aware architecture search over a benchmark store.
//!
//! Exit codes: 0 success, 2 bad or incomplete configuration (also used by
//! argument parsing), 3 missing or malformed data, 4 text service
//! unreachable in live mode.

mod commands;
mod config;
mod error;
mod plot;

use clap::{Parser, Subcommand};
use config::{EngineFlags, ServiceFlags};
use hwnas::store::DEFAULT_SYNTH_SEED;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "hwnas",
    version,
    about = "Hardware-aware architecture search: synthesize or ingest a benchmark store, \
             fit a surrogate, run the niche-partitioned search, and score fronts",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a full synthetic benchmark store and its generator sidecar
    Synth {
        /// Generator seed; every store value is a pure function of it
        #[arg(long, default_value_t = DEFAULT_SYNTH_SEED)]
        seed: u64,
        /// Dataset label written into every row
        #[arg(long, default_value = "cifar10")]
        dataset: String,
        /// Output store path; the sidecar lands next to it as
        /// `<out>.model.json`
        #[arg(long)]
        out: PathBuf,
        /// Store encoding: csv or jsonl (default: by file extension)
        #[arg(long)]
        format: Option<String>,
        /// Re-synthesize from a previously written sidecar instead of a seed
        #[arg(long, conflicts_with = "seed")]
        from_model: Option<PathBuf>,
    },
    /// Convert a foreign benchmark CSV into the canonical store schema
    Ingest {
        /// Source CSV with arbitrary column names
        #[arg(long)]
        csv: PathBuf,
        /// TOML column mapping: arch, accuracy, per-device latency columns,
        /// dataset column or fixed value, optional proxy columns
        #[arg(long)]
        map: PathBuf,
        /// Output store path in the canonical schema
        #[arg(long)]
        out: PathBuf,
        /// Store encoding: csv or jsonl (default: by file extension)
        #[arg(long)]
        format: Option<String>,
    },
    /// Fit the accuracy surrogate on a store's proxy features
    Fit {
        /// Search configuration file supplying store and dataset defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Benchmark store path
        #[arg(long)]
        store: Option<PathBuf>,
        /// Dataset to fit on
        #[arg(long)]
        dataset: Option<String>,
        /// Rows sampled for training; a disjoint sample of equal size forms
        /// the holdout
        #[arg(long, default_value_t = 1000)]
        sample_size: usize,
        /// Sampling seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path for the fitted predictor
        #[arg(long)]
        out: PathBuf,
        /// Also write the fit report (train size, holdout Spearman) here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the niche-partitioned search and write the run artifacts
    Search {
        /// TOML configuration file; any flag below overrides its value
        #[arg(long)]
        config: Option<PathBuf>,
        /// Benchmark store path
        #[arg(long)]
        store: Option<PathBuf>,
        /// Surrogate: auto (fit on proxy features when present, else oracle
        /// lookup with a warning), oracle, rank, or a path to a fitted
        /// predictor file
        #[arg(long)]
        predictor: Option<String>,
        /// Directory for front.csv, report.json, events.jsonl, hv_trace.csv
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineFlags,
        #[command(flatten)]
        service: ServiceFlags,
    },
    /// Score a front file against a truth source with hypervolume and IGD
    Metrics {
        /// Search configuration file supplying store, bounds, and dataset
        /// defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Front CSV to score
        #[arg(long)]
        front: PathBuf,
        /// Truth source: store path whose brute-force true front is the
        /// reference
        #[arg(long)]
        truth_store: Option<PathBuf>,
        /// Truth source: reference front CSV
        #[arg(long)]
        truth_front: Option<PathBuf>,
        /// Dataset the fronts refer to
        #[arg(long)]
        dataset: Option<String>,
        /// Device whose latency objective is scored
        #[arg(long)]
        device: Option<String>,
        /// Accept a truth store that covers only part of the space
        #[arg(long)]
        allow_partial: bool,
        /// Explicit normalization bounds as acc_min,acc_max,lat_min,lat_max
        #[arg(long)]
        bounds: Option<String>,
        /// Also write the metrics report JSON here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a store's brute-force true Pareto front
    Front {
        /// Search configuration file supplying store and dataset defaults
        #[arg(long)]
        config: Option<PathBuf>,
        /// Benchmark store path
        #[arg(long)]
        store: Option<PathBuf>,
        /// Dataset to rank
        #[arg(long)]
        dataset: Option<String>,
        /// Device whose latency forms the second objective
        #[arg(long)]
        device: Option<String>,
        /// Accept a store that covers only part of the space
        #[arg(long)]
        allow_partial: bool,
        /// Output front CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge front files into one labeled scatter CSV, optionally with an
    /// SVG rendering
    PlotData {
        /// Front CSV files to merge, in series order
        #[arg(required = true)]
        fronts: Vec<PathBuf>,
        /// Series label per front file (default: file stem)
        #[arg(long)]
        label: Vec<String>,
        /// Merged CSV output path
        #[arg(long)]
        out: PathBuf,
        /// Also render a deterministic SVG scatter here
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Enumerate the whole cell space and the niche cardinalities
    Enumerate {
        /// Also write every cell with its niche assignment to this CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), error::CliError> {
    match cli.command {
        Command::Synth {
            seed,
            dataset,
            out,
            format,
            from_model,
        } => commands::cmd_synth(seed, &dataset, &out, format.as_deref(), from_model.as_deref()),
        Command::Ingest {
            csv,
            map,
            out,
            format,
        } => commands::cmd_ingest(&csv, &map, &out, format.as_deref()),
        Command::Fit {
            config,
            store,
            dataset,
            sample_size,
            seed,
            out,
            report,
        } => commands::cmd_fit(
            config.as_deref(),
            store,
            dataset,
            sample_size,
            seed,
            &out,
            report.as_deref(),
        ),
        Command::Search {
            config,
            store,
            predictor,
            out_dir,
            engine,
            service,
        } => commands::cmd_search(
            config.as_deref(),
            store,
            predictor,
            out_dir,
            &engine,
            &service,
        ),
        Command::Metrics {
            config,
            front,
            truth_store,
            truth_front,
            dataset,
            device,
            allow_partial,
            bounds,
            out,
        } => commands::cmd_metrics(
            config.as_deref(),
            &front,
            truth_store,
            truth_front,
            dataset,
            device,
            allow_partial,
            bounds,
            out.as_deref(),
        ),
        Command::Front {
            config,
            store,
            dataset,
            device,
            allow_partial,
            out,
        } => commands::cmd_front(
            config.as_deref(),
            store,
            dataset,
            device,
            allow_partial,
            &out,
        ),
        Command::PlotData {
            fronts,
            label,
            out,
            svg,
        } => commands::cmd_plot_data(&fronts, &label, &out, svg.as_deref()),
        Command::Enumerate { out } => commands::cmd_enumerate(out.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
