//! Geodesic motif distances, per-class distance tables, daily series and
//! the run report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PoiCatalog;
use crate::metrics::NetworkSummary;
use crate::motifs::{InstanceTally, MotifCensus, MotifClass, MotifInstance};

/// IUGG mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

pub const REPORT_SCHEMA_VERSION: &str = "placeweave-report/1";

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("coordinate ({lat}, {lon}) is out of range")]
    Coordinate { lat: f64, lon: f64 },
    #[error("poi `{0}` has no coordinates in the catalog")]
    MissingPoi(String),
    #[error("nothing to average")]
    Empty,
    #[error("series needs at least {needed} points, has {got}")]
    TooShort { needed: usize, got: usize },
    #[error("dates must be strictly increasing ({0} follows {1})")]
    Unordered(NaiveDate, NaiveDate),
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("report is missing the `{0}` section")]
    MissingSection(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    /// Saturday and Sunday are weekend days.
    pub fn of(date: NaiveDate) -> DayType {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

fn check_coord(lat: f64, lon: f64) -> Result<(), StatsError> {
    if lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
        Ok(())
    } else {
        Err(StatsError::Coordinate { lat, lon })
    }
}

/// Great-circle distance in kilometers between two points given in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64, StatsError> {
    check_coord(lat1, lon1)?;
    check_coord(lat2, lon2)?;
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dlat = (lat2 - lat1).to_radians();
    let dlon = (lon2 - lon1).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlon / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin())
}

/// Mean haversine length of the instance's edges.
pub fn motif_avg_distance(instance: &MotifInstance, catalog: &PoiCatalog) -> Result<f64, StatsError> {
    if instance.edges.is_empty() {
        return Err(StatsError::Empty);
    }
    let coords = instance
        .nodes
        .iter()
        .map(|id| catalog.get(id).map(|p| (p.lat, p.lon)).ok_or_else(|| StatsError::MissingPoi(id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    for &(a, b) in &instance.edges {
        let (pa, pb) = (coords[a as usize], coords[b as usize]);
        total += haversine_km(pa.0, pa.1, pb.0, pb.1)?;
    }
    Ok(total / instance.edges.len() as f64)
}

/// How instances are weighted in class distance averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceWeighting {
    /// By covering device-days.
    #[default]
    Devices,
    /// Each distinct instance once.
    Instances,
}

impl fmt::Display for DistanceWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceWeighting::Devices => "devices",
            DistanceWeighting::Instances => "instances",
        })
    }
}

impl FromStr for DistanceWeighting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "devices" => Ok(DistanceWeighting::Devices),
            "instances" => Ok(DistanceWeighting::Instances),
            other => Err(format!("unknown distance weighting `{other}` (expected devices|instances)")),
        }
    }
}

/// One instance's distance and day split, the input to
/// [`class_avg_distance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceItem {
    pub class: MotifClass,
    pub avg_km: f64,
    pub weekday_days: u64,
    pub weekend_days: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitDistance {
    pub total: Option<f64>,
    pub weekday: Option<f64>,
    pub weekend: Option<f64>,
}

/// Average motif distance per class, split by day type.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    pub weighting: DistanceWeighting,
    pub classes: BTreeMap<MotifClass, SplitDistance>,
}

#[derive(Default)]
struct WeightedMean {
    sum: f64,
    weight: f64,
}

impl WeightedMean {
    fn add(&mut self, value: f64, weight: f64) {
        if weight > 0.0 {
            self.sum += value * weight;
            self.weight += weight;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.weight > 0.0).then(|| self.sum / self.weight)
    }
}

/// Per-class means of instance distances. Items are summed in the order
/// given.
pub fn class_avg_distance(items: &[DistanceItem], weighting: DistanceWeighting) -> Result<DistanceTable, StatsError> {
    if items.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut acc: BTreeMap<MotifClass, [WeightedMean; 3]> = BTreeMap::new();
    for item in items {
        let slot = acc.entry(item.class).or_default();
        let (wd, we) = (item.weekday_days as f64, item.weekend_days as f64);
        match weighting {
            DistanceWeighting::Devices => {
                slot[0].add(item.avg_km, wd + we);
                slot[1].add(item.avg_km, wd);
                slot[2].add(item.avg_km, we);
            }
            DistanceWeighting::Instances => {
                slot[0].add(item.avg_km, 1.0);
                slot[1].add(item.avg_km, if wd > 0.0 { 1.0 } else { 0.0 });
                slot[2].add(item.avg_km, if we > 0.0 { 1.0 } else { 0.0 });
            }
        }
    }
    Ok(DistanceTable {
        weighting,
        classes: acc
            .into_iter()
            .map(|(c, m)| (c, SplitDistance { total: m[0].get(), weekday: m[1].get(), weekend: m[2].get() }))
            .collect(),
    })
}

/// Computes each tally's distance from the catalog, then
/// [`class_avg_distance`].
pub fn class_avg_distance_for(
    tallies: &[InstanceTally],
    catalog: &PoiCatalog,
    weighting: DistanceWeighting,
) -> Result<DistanceTable, StatsError> {
    let items = tallies
        .iter()
        .map(|t| {
            Ok(DistanceItem {
                class: t.instance.class,
                avg_km: motif_avg_distance(&t.instance, catalog)?,
                weekday_days: t.weekday_days,
                weekend_days: t.weekend_days,
            })
        })
        .collect::<Result<Vec<_>, StatsError>>()?;
    class_avg_distance(&items, weighting)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: NaiveDate,
    pub day_type: DayType,
    /// `None` marks an undefined value.
    pub value: Option<f64>,
}

/// Values by local date, dates strictly increasing; gaps are allowed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub points: Vec<SeriesPoint>,
}

impl DailySeries {
    pub fn new(values: impl IntoIterator<Item = (NaiveDate, Option<f64>)>) -> Result<Self, StatsError> {
        let mut points: Vec<SeriesPoint> = Vec::new();
        for (date, value) in values {
            if let Some(prev) = points.last() {
                if date <= prev.date {
                    return Err(StatsError::Unordered(date, prev.date));
                }
            }
            points.push(SeriesPoint { date, day_type: DayType::of(date), value });
        }
        Ok(DailySeries { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// A class's daily motif counts and average distances.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClassSeries {
    pub counts: DailySeries,
    /// Days where the class has no instances are absent.
    pub distances: DailySeries,
}

/// Turns per-day censuses into one series pair per motif class.
pub fn daily_census_series(
    per_day: &BTreeMap<NaiveDate, MotifCensus>,
) -> Result<BTreeMap<MotifClass, ClassSeries>, StatsError> {
    if per_day.len() < 2 {
        return Err(StatsError::TooShort { needed: 2, got: per_day.len() });
    }
    let mut out = BTreeMap::new();
    for class in MotifClass::MOTIFS {
        let counts = DailySeries::new(per_day.iter().map(|(d, c)| (*d, Some(c.row(class).motif_count as f64))))?;
        let distances =
            DailySeries::new(per_day.iter().filter_map(|(d, c)| c.row(class).avg_distance_km.map(|v| (*d, Some(v)))))?;
        out.insert(class, ClassSeries { counts, distances });
    }
    Ok(out)
}

/// Percentage change against the previous point of the same day type.
///
/// Weekdays and weekends form separate chains; each chain's first point is
/// dropped. A zero or undefined baseline gives an undefined point.
pub fn pct_change_series(series: &DailySeries) -> Result<DailySeries, StatsError> {
    if series.len() < 2 {
        return Err(StatsError::TooShort { needed: 2, got: series.len() });
    }
    let mut prev: BTreeMap<DayType, Option<f64>> = BTreeMap::new();
    let mut points = Vec::new();
    for p in &series.points {
        if let Some(base) = prev.insert(p.day_type, p.value) {
            let value = match (base, p.value) {
                (Some(b), Some(v)) if b != 0.0 => Some(100.0 * (v - b) / b),
                _ => None,
            };
            points.push(SeriesPoint { value, ..*p });
        }
    }
    Ok(DailySeries { points })
}

/// Trailing mean over the last `window` points; the first `window − 1`
/// points are dropped. A window containing an undefined value is undefined.
pub fn moving_average(series: &DailySeries, window: usize) -> Result<DailySeries, StatsError> {
    if window == 0 {
        return Err(StatsError::ZeroWindow);
    }
    if window > series.len() {
        return Err(StatsError::TooShort { needed: window, got: series.len() });
    }
    let points = series
        .points
        .windows(window)
        .map(|w| {
            let value = w.iter().map(|p| p.value).sum::<Option<f64>>().map(|s| s / window as f64);
            SeriesPoint { value, ..*w.last().expect("window is non-empty") }
        })
        .collect();
    Ok(DailySeries { points })
}

/// Share of the global totals covered by the nine classes, in percent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub motifs_pct: Option<f64>,
    pub devices_pct: Option<f64>,
    pub flows_pct: Option<f64>,
}

impl Coverage {
    pub fn of(census: &MotifCensus) -> Coverage {
        let pct = |part: u64, whole: u64| (whole > 0).then(|| 100.0 * part as f64 / whole as f64);
        let sum = |f: fn(&crate::motifs::CensusRow) -> u64| -> u64 {
            MotifClass::MOTIFS.iter().map(|&c| f(census.row(c))).sum()
        };
        Coverage {
            motifs_pct: pct(sum(|r| r.motif_count), census.global.motif_count),
            devices_pct: pct(sum(|r| r.device_count), census.global.device_count),
            flows_pct: pct(sum(|r| r.flow_count), census.global.flow_count),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReportRow {
    pub class: String,
    pub motif_count: u64,
    pub device_count: u64,
    pub flow_count: u64,
    pub percentage: Option<f64>,
    pub avg_distance_km: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusSection {
    pub mode: String,
    /// What `device_count` counts.
    pub device_unit: String,
    /// Global row first, then every class including `OTHER`.
    pub rows: Vec<CensusReportRow>,
    pub coverage: Coverage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReportRow {
    pub class: String,
    pub split: String,
    pub km: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub config: serde_json::Value,
    pub network: Option<NetworkSummary>,
    pub census: CensusSection,
    pub distances: Option<Vec<DistanceReportRow>>,
    pub series_files: Vec<String>,
}

/// Everything a report can embed; `config` and `census` are mandatory.
#[derive(Clone, Debug, Default)]
pub struct ReportInputs {
    pub config: Option<serde_json::Value>,
    pub summary: Option<NetworkSummary>,
    pub census: Option<MotifCensus>,
    pub census_mode: String,
    pub distances: Option<DistanceTable>,
    pub series_files: Vec<String>,
}

/// Distance table rows in (class, split) order, undefined cells omitted.
pub fn distance_rows(table: &DistanceTable) -> Vec<DistanceReportRow> {
    let mut rows = Vec::new();
    for (class, split) in &table.classes {
        for (name, km) in [("total", split.total), ("weekday", split.weekday), ("weekend", split.weekend)] {
            if let Some(km) = km {
                rows.push(DistanceReportRow { class: class.name().to_owned(), split: name.to_owned(), km });
            }
        }
    }
    rows
}

pub fn build_report(inputs: ReportInputs) -> Result<Report, StatsError> {
    let config = inputs.config.ok_or(StatsError::MissingSection("config"))?;
    let census = inputs.census.ok_or(StatsError::MissingSection("census"))?;
    let row = |class: &str, r: &crate::motifs::CensusRow| CensusReportRow {
        class: class.to_owned(),
        motif_count: r.motif_count,
        device_count: r.device_count,
        flow_count: r.flow_count,
        percentage: r.percentage,
        avg_distance_km: r.avg_distance_km,
    };
    let mut rows = vec![row("global", &census.global)];
    rows.extend(MotifClass::ALL.iter().map(|&c| row(c.name(), census.row(c))));
    Ok(Report {
        schema_version: REPORT_SCHEMA_VERSION.to_owned(),
        tool: ToolInfo { name: "placeweave".to_owned(), version: env!("CARGO_PKG_VERSION").to_owned() },
        config,
        network: inputs.summary,
        census: CensusSection {
            device_unit: if inputs.census_mode == "trajectory" { "device-days" } else { "none" }.to_owned(),
            mode: inputs.census_mode,
            rows,
            coverage: Coverage::of(&census),
        },
        distances: inputs.distances.as_ref().map(distance_rows),
        series_files: inputs.series_files,
    })
}

/// Structural check of a report document; returns every problem found.
pub fn validate_report(doc: &serde_json::Value) -> Result<(), Vec<String>> {
    let mut problems = Vec::new();
    let obj = match doc.as_object() {
        Some(o) => o,
        None => return Err(vec!["report is not an object".into()]),
    };
    match obj.get("schema_version").and_then(|v| v.as_str()) {
        Some(REPORT_SCHEMA_VERSION) => {}
        other => problems.push(format!("schema_version is {other:?}, expected {REPORT_SCHEMA_VERSION}")),
    }
    for key in ["name", "version"] {
        if obj.get("tool").and_then(|t| t.get(key)).and_then(|v| v.as_str()).is_none() {
            problems.push(format!("tool.{key} missing"));
        }
    }
    if !obj.get("config").is_some_and(|c| c.is_object()) {
        problems.push("config must be an object".into());
    }
    match obj.get("network") {
        Some(serde_json::Value::Null) | None => {}
        Some(net) => {
            for key in ["nodes", "edges", "total_weight", "average_degree", "average_clustering"] {
                if !net.get(key).is_some_and(|v| v.is_number()) {
                    problems.push(format!("network.{key} missing"));
                }
            }
        }
    }
    match obj.get("census").and_then(|c| c.get("rows")).and_then(|r| r.as_array()) {
        None => problems.push("census.rows missing".into()),
        Some(rows) => {
            let names: Vec<&str> = rows.iter().filter_map(|r| r.get("class").and_then(|c| c.as_str())).collect();
            let mut expected = vec!["global"];
            expected.extend(MotifClass::ALL.iter().map(|c| c.name()));
            if names != expected {
                problems.push(format!("census rows are {names:?}, expected {expected:?}"));
            }
            for r in rows {
                for key in ["motif_count", "device_count", "flow_count"] {
                    if !r.get(key).is_some_and(|v| v.is_u64()) {
                        problems.push(format!("census row field {key} missing"));
                    }
                }
            }
        }
    }
    if !obj.get("series_files").is_some_and(|s| s.is_array()) {
        problems.push("series_files must be an array".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems)
    }
}
