use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use placeweave::ingest::DEFAULT_MIN_DWELL;
use placeweave::netbuild::NetworkMode;
use placeweave::stats::DistanceWeighting;
use serde::{Deserialize, Serialize};

/// Which census feeds the report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensusMode {
    /// Connected induced subgraphs of the merged network.
    Enumerate,
    /// Per device-day trajectory graphs.
    #[default]
    Trajectory,
}

impl fmt::Display for CensusMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CensusMode::Enumerate => "enumerate",
            CensusMode::Trajectory => "trajectory",
        })
    }
}

impl FromStr for CensusMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "enumerate" => Ok(CensusMode::Enumerate),
            "trajectory" => Ok(CensusMode::Trajectory),
            other => Err(format!("unknown census mode `{other}` (expected enumerate|trajectory)")),
        }
    }
}

fn default_min_dwell() -> u64 {
    DEFAULT_MIN_DWELL
}
fn default_top_k() -> usize {
    10
}
fn default_min_count() -> u64 {
    1
}
fn default_window() -> usize {
    7
}
fn default_xmin() -> usize {
    1
}

/// Resolved settings for every stage. Command-line flags override values
/// read from the `--config` file; anything unset takes its default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub stops: Option<PathBuf>,
    #[serde(default)]
    pub pois: Option<PathBuf>,
    /// Optional `code,title` file naming 4-digit categories.
    #[serde(default)]
    pub naics_names: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "default_min_dwell")]
    pub min_dwell: u64,
    #[serde(default)]
    pub utc_offset: i32,
    #[serde(default)]
    pub first_date: Option<NaiveDate>,
    #[serde(default)]
    pub last_date: Option<NaiveDate>,
    #[serde(default)]
    pub network_mode: NetworkMode,
    #[serde(default)]
    pub census_mode: CensusMode,
    #[serde(default)]
    pub distance_weighting: DistanceWeighting,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
    #[serde(default = "default_window")]
    pub moving_average_window: usize,
    #[serde(default = "default_xmin")]
    pub power_law_xmin: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

impl RunConfig {
    /// Semantic checks that serde cannot express.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(-23..=23).contains(&self.utc_offset) {
            out.push(format!("utc_offset {} is outside -23..=23", self.utc_offset));
        }
        if self.top_k == 0 {
            out.push("top_k must be at least 1".into());
        }
        if self.moving_average_window == 0 {
            out.push("moving_average_window must be at least 1".into());
        }
        if self.power_law_xmin == 0 {
            out.push("power_law_xmin must be at least 1".into());
        }
        if self.threads == Some(0) {
            out.push("threads must be at least 1".into());
        }
        if let (Some(a), Some(b)) = (self.first_date, self.last_date) {
            if b < a {
                out.push(format!("last_date {b} precedes first_date {a}"));
            }
        }
        out
    }

    /// The configuration as embedded in reports: thread count and output
    /// directory are left out so results compare equal across both.
    pub fn provenance(&self) -> serde_json::Value {
        let echoed = RunConfig { out: None, threads: None, ..self.clone() };
        let mut value = serde_json::to_value(echoed).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("out");
            obj.remove("threads");
        }
        value
    }
}

/// Parses a config document, applying defaults. An empty document is the
/// default config. Returns every problem found.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<String>> {
    let text = if text.trim().is_empty() { "{}" } else { text };
    let config: RunConfig = serde_json::from_str(text).map_err(|e| vec![e.to_string()])?;
    let problems = config.problems();
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(problems)
    }
}

pub fn validate_config(path: &Path) -> Result<RunConfig, Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    parse_config(&text)
}
