use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};
use placeweave::netbuild::NetworkMode;
use placeweave::refnets::RefNetKind;
use placeweave::stats::DistanceWeighting;

mod config;
mod error;
mod pipeline;
mod stages;

use config::{validate_config, CensusMode, RunConfig};
use error::{CliError, CliResult};

/// Networks of places from stop records: visitation networks, motif
/// censuses, attributed motifs and daily series.
#[derive(Parser)]
#[command(name = "placeweave", version)]
struct Cli {
    /// JSON configuration; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to the available hardware parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (an edge file for `refnet`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic POI catalog and stop records.
    Synth {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        traffic: PathBuf,
    },
    /// Filter stops into per-device-day stay sequences.
    Ingest {
        #[arg(long)]
        stops: PathBuf,
        #[arg(long)]
        pois: PathBuf,
        #[arg(long)]
        min_dwell: Option<u64>,
        #[arg(long, allow_negative_numbers = true)]
        utc_offset: Option<i32>,
        #[arg(long)]
        first_date: Option<NaiveDate>,
        #[arg(long)]
        last_date: Option<NaiveDate>,
    },
    /// Build the network of places, optionally one per day.
    Network {
        #[arg(long)]
        sequences: PathBuf,
        #[arg(long)]
        mode: Option<NetworkMode>,
        #[arg(long)]
        daily: bool,
    },
    /// Degree distribution, clustering and distribution fits.
    Metrics {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        xmin: Option<usize>,
        /// Also summarize size-matched random and scale-free networks.
        #[arg(long)]
        references: bool,
    },
    /// Generate a random or scale-free reference network.
    Refnet {
        #[arg(long)]
        kind: RefNetKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        avg_degree: f64,
    },
    /// Motif census by subgraph enumeration or trajectory classification.
    Motifs {
        #[arg(long)]
        network: Option<PathBuf>,
        /// Directory of daily networks to census one by one (enumerate mode).
        #[arg(long)]
        daily_networks: Option<PathBuf>,
        #[arg(long)]
        mode: Option<CensusMode>,
        /// Sequences file, or the ingest output directory.
        #[arg(long)]
        sequences: Option<PathBuf>,
        /// POI catalog, for motif distances.
        #[arg(long)]
        pois: Option<PathBuf>,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        distance_weighting: Option<DistanceWeighting>,
    },
    /// Attributed motif census and category frequencies.
    Attributed {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long)]
        pois: PathBuf,
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        naics_names: Option<PathBuf>,
    },
    /// Daily series, distance table and report from a motifs directory.
    Series {
        #[arg(long)]
        census_dir: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        distance_weighting: Option<DistanceWeighting>,
        /// A `summary.json` from `metrics` to embed in the report.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// All stages end to end.
    Run {
        #[arg(long)]
        stops: Option<PathBuf>,
        #[arg(long)]
        pois: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => validate_config(path)
            .map_err(|problems| CliError::Input(format!("{}: {}", path.display(), problems.join("; "))))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.out.is_some() {
        config.out.clone_from(&cli.out);
    }
    if cli.threads.is_some() {
        config.threads = cli.threads;
    }
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(CliError::Input(problems.join("; ")));
    }
    Ok(config)
}

fn out_dir(config: &RunConfig) -> CliResult<&Path> {
    config.out.as_deref().ok_or_else(|| CliError::input("--out is required"))
}

fn dispatch(cli: Cli, mut config: RunConfig) -> CliResult<()> {
    match cli.command {
        Command::Synth { world, traffic } => {
            let args = stages::SynthArgs { world: &world, traffic: &traffic, seed: cli.seed, out: out_dir(&config)? };
            stages::synth(&args)?;
        }
        Command::Ingest { stops, pois, min_dwell, utc_offset, first_date, last_date } => {
            stages::ingest(&stages::IngestArgs {
                stops: &stops,
                pois: &pois,
                min_dwell: min_dwell.unwrap_or(config.min_dwell),
                utc_offset: utc_offset.unwrap_or(config.utc_offset),
                first_date: first_date.or(config.first_date),
                last_date: last_date.or(config.last_date),
                out: out_dir(&config)?,
            })?;
        }
        Command::Network { sequences, mode, daily } => {
            stages::network(&stages::NetworkArgs {
                sequences: &sequences,
                mode: mode.unwrap_or(config.network_mode),
                daily,
                out: out_dir(&config)?,
            })?;
        }
        Command::Metrics { network, xmin, references } => {
            stages::metrics(&stages::MetricsArgs {
                network: &network,
                xmin: xmin.unwrap_or(config.power_law_xmin),
                references: references.then_some(config.seed),
                out: out_dir(&config)?,
            })?;
        }
        Command::Refnet { kind, n, avg_degree } => {
            stages::refnet(&stages::RefnetArgs { kind, n, avg_degree, seed: config.seed, out: out_dir(&config)? })?;
        }
        Command::Motifs { network, daily_networks, mode, sequences, pois, min_count, distance_weighting } => {
            stages::motifs(&stages::MotifsArgs {
                network: network.as_deref(),
                daily_networks: daily_networks.as_deref(),
                mode: mode.unwrap_or(config.census_mode),
                sequences: sequences.as_deref(),
                pois: pois.as_deref(),
                min_count: min_count.unwrap_or(config.min_count),
                weighting: distance_weighting.unwrap_or(config.distance_weighting),
                out: out_dir(&config)?,
            })?;
        }
        Command::Attributed { instances, pois, top, naics_names } => {
            stages::attributed(&stages::AttributedArgs {
                instances: &instances,
                pois: &pois,
                top_k: top.unwrap_or(config.top_k),
                naics_names: naics_names.as_deref().or(config.naics_names.as_deref()),
                out: out_dir(&config)?,
            })?;
        }
        Command::Series { census_dir, window, distance_weighting, summary } => {
            if let Some(w) = window {
                config.moving_average_window = w;
            }
            if let Some(d) = distance_weighting {
                config.distance_weighting = d;
            }
            let out = out_dir(&config)?;
            stages::series(&stages::SeriesArgs {
                census_dir: &census_dir,
                window: config.moving_average_window,
                weighting: config.distance_weighting,
                summary: summary.as_deref(),
                config: config.provenance(),
                out,
                report: &out.join("report.json"),
            })?;
        }
        Command::Run { stops, pois } => {
            if stops.is_some() {
                config.stops = stops;
            }
            if pois.is_some() {
                config.pois = pois;
            }
            let problems = config.problems();
            if !problems.is_empty() {
                return Err(CliError::Input(problems.join("; ")));
            }
            pipeline::run(&config, out_dir(&config)?)?;
        }
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn with_threads(threads: Option<usize>, f: impl FnOnce() -> CliResult<()> + Send) -> CliResult<()> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::input(format!("thread pool: {e}")))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads(threads: Option<usize>, f: impl FnOnce() -> CliResult<()> + Send) -> CliResult<()> {
    if threads.is_some_and(|n| n > 1) {
        tracing::warn!("built without the `parallel` feature; running on one thread");
    }
    f()
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(std::io::stderr).with_target(false).init();
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|config| with_threads(config.threads, move || dispatch(cli, config)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            tracing::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
