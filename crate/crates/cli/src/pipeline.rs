use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tracing::info;

use crate::config::{CensusMode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::stages::{self, AttributedArgs, IngestArgs, MetricsArgs, MotifsArgs, NetworkArgs, SeriesArgs};

#[derive(Serialize)]
struct StageRecord {
    name: &'static str,
    status: &'static str,
    outputs: Vec<String>,
}

/// Progress record written after every stage, so an interrupted run
/// leaves a trail of which outputs are complete.
#[derive(Serialize)]
struct Manifest {
    status: &'static str,
    stages: Vec<StageRecord>,
    failed_stage: Option<&'static str>,
    error: Option<String>,
}

struct Tracker<'a> {
    out: &'a Path,
    manifest: Manifest,
}

impl Tracker<'_> {
    fn save(&self) -> CliResult<()> {
        let path = self.out.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::at(&path, e))
    }

    fn record(&mut self, name: &'static str, status: &'static str, outputs: &[PathBuf]) -> CliResult<()> {
        let outputs = outputs
            .iter()
            .map(|p| p.strip_prefix(self.out).unwrap_or(p).to_string_lossy().replace('\\', "/"))
            .collect();
        self.manifest.stages.push(StageRecord { name, status, outputs });
        self.save()
    }

    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce() -> CliResult<(T, Vec<PathBuf>)>) -> CliResult<T> {
        info!(stage = name, "starting");
        match f() {
            Ok((value, outputs)) => {
                self.record(name, "complete", &outputs)?;
                Ok(value)
            }
            Err(e) => {
                self.manifest.status = "failed";
                self.manifest.failed_stage = Some(name);
                self.manifest.error = Some(e.to_string());
                self.save()?;
                Err(e)
            }
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::input(format!("`{what}` is required (config key or --{what})")))
}

/// Runs every stage into `out`. `report.json` is written last, so it only
/// exists after a fully successful run.
pub fn run(config: &RunConfig, out: &Path) -> CliResult<()> {
    let stops = required(&config.stops, "stops")?;
    let pois = required(&config.pois, "pois")?;
    fs::create_dir_all(out).map_err(|e| CliError::at(out, e))?;
    let report = out.join("report.json");
    if report.exists() {
        fs::remove_file(&report).map_err(|e| CliError::at(&report, e))?;
    }
    let mut t =
        Tracker { out, manifest: Manifest { status: "running", stages: Vec::new(), failed_stage: None, error: None } };
    t.save()?;

    let (ingest_dir, network_dir, metrics_dir, motifs_dir) =
        (out.join("ingest"), out.join("network"), out.join("metrics"), out.join("motifs"));
    t.stage("ingest", || {
        stages::ingest(&IngestArgs {
            stops,
            pois,
            min_dwell: config.min_dwell,
            utc_offset: config.utc_offset,
            first_date: config.first_date,
            last_date: config.last_date,
            out: &ingest_dir,
        })
    })?;
    let sequences = ingest_dir.join("sequences.csv");
    let catalog = ingest_dir.join("pois.csv");
    let network = network_dir.join("network.csv");

    t.stage("network", || {
        let args = NetworkArgs { sequences: &sequences, mode: config.network_mode, daily: true, out: &network_dir };
        stages::network(&args).map(|o| ((), o))
    })?;
    t.stage("metrics", || {
        let args = MetricsArgs {
            network: &network,
            xmin: config.power_law_xmin,
            references: Some(config.seed),
            out: &metrics_dir,
        };
        stages::metrics(&args).map(|o| ((), o))
    })?;
    t.stage("motifs", || {
        let args = MotifsArgs {
            network: Some(&network),
            daily_networks: Some(&network_dir.join("daily")),
            mode: config.census_mode,
            sequences: Some(&sequences),
            pois: Some(&catalog),
            min_count: config.min_count,
            weighting: config.distance_weighting,
            out: &motifs_dir,
        };
        stages::motifs(&args).map(|o| ((), o))
    })?;
    if config.census_mode == CensusMode::Trajectory {
        t.stage("attributed", || {
            let args = AttributedArgs {
                instances: &motifs_dir.join("instances.jsonl"),
                pois: &catalog,
                top_k: config.top_k,
                naics_names: config.naics_names.as_deref(),
                out: &out.join("attributed"),
            };
            stages::attributed(&args).map(|o| ((), o))
        })?;
    } else {
        t.record("attributed", "skipped", &[])?;
    }
    t.stage("series", || {
        let args = SeriesArgs {
            census_dir: &motifs_dir,
            window: config.moving_average_window,
            weighting: config.distance_weighting,
            summary: Some(&metrics_dir.join("summary.json")),
            config: config.provenance(),
            out: &out.join("series"),
            report: &report,
        };
        stages::series(&args).map(|o| ((), o))
    })?;
    t.manifest.status = "complete";
    t.save()?;
    info!(report = %report.display(), "run complete");
    Ok(())
}
