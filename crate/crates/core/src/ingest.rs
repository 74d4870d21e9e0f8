//! Stop and POI parsing, the dwell-time visit criterion, and per-device-day
//! stay sequences.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default minimum dwell, in seconds, for a stop to count as a visit.
pub const DEFAULT_MIN_DWELL: u64 = 300;

pub const STOPS_HEADER: [&str; 4] = ["device_id", "poi_id", "start_time", "dwell"];
pub const POIS_HEADER: [&str; 5] = ["poi_id", "name", "lat", "lon", "naics"];
pub const SEQUENCES_HEADER: [&str; 4] = ["device_id", "local_date", "position", "poi_id"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{file} file is missing column `{column}`")]
    MissingColumn { file: &'static str, column: &'static str },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: duplicate poi_id `{poi_id}`")]
    DuplicatePoi { line: u64, poi_id: String },
    #[error("line {line}: {field} {value} is out of range")]
    CoordinateRange { line: u64, field: &'static str, value: f64 },
    #[error("line {line}: naics `{value}` must be 2 to 6 decimal digits")]
    InvalidNaics { line: u64, value: String },
    #[error("utc offset {0} h is outside -23..=23")]
    UtcOffset(i32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    /// True for errors that invalidate the whole file rather than one row.
    pub fn is_schema_error(&self) -> bool {
        matches!(self, IngestError::MissingColumn { .. })
    }
}

/// A row rejected during lenient parsing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// Successfully parsed rows plus the rows that were rejected.
#[derive(Clone, Debug)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejected: Vec<RowError>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed { records: Vec::new(), rejected: Vec::new() }
    }
}

/// One device stay at one POI.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StopRecord {
    pub device_id: String,
    pub poi_id: String,
    /// UTC epoch seconds.
    pub start_time: i64,
    /// Stay duration in seconds.
    pub dwell: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub poi_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub naics: String,
}

/// One device's ordered POI visits within one local calendar day.
///
/// Always holds at least two stays and never two equal consecutive stays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaySequence {
    pub device_id: String,
    pub local_date: NaiveDate,
    pub stays: Vec<String>,
}

/// POIs keyed by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PoiCatalog {
    pois: BTreeMap<String, PoiRecord>,
}

impl PoiCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a catalog, validating every record. `line` in errors is the
    /// 1-based record position.
    pub fn from_records(records: impl IntoIterator<Item = PoiRecord>) -> Result<Self, IngestError> {
        let mut catalog = PoiCatalog::new();
        for (i, rec) in records.into_iter().enumerate() {
            catalog.insert(rec, i as u64 + 1)?;
        }
        Ok(catalog)
    }

    fn insert(&mut self, rec: PoiRecord, line: u64) -> Result<(), IngestError> {
        validate_poi(&rec, line)?;
        if self.pois.contains_key(&rec.poi_id) {
            return Err(IngestError::DuplicatePoi { line, poi_id: rec.poi_id });
        }
        self.pois.insert(rec.poi_id.clone(), rec);
        Ok(())
    }

    pub fn get(&self, poi_id: &str) -> Option<&PoiRecord> {
        self.pois.get(poi_id)
    }

    pub fn contains(&self, poi_id: &str) -> bool {
        self.pois.contains_key(poi_id)
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    /// Records in ascending `poi_id` order.
    pub fn iter(&self) -> impl Iterator<Item = &PoiRecord> {
        self.pois.values()
    }
}

fn validate_poi(rec: &PoiRecord, line: u64) -> Result<(), IngestError> {
    if rec.poi_id.is_empty() {
        return Err(IngestError::Row { line, message: "empty poi_id".into() });
    }
    if !rec.lat.is_finite() || !(-90.0..=90.0).contains(&rec.lat) {
        return Err(IngestError::CoordinateRange { line, field: "lat", value: rec.lat });
    }
    if !rec.lon.is_finite() || !(-180.0..=180.0).contains(&rec.lon) {
        return Err(IngestError::CoordinateRange { line, field: "lon", value: rec.lon });
    }
    let n = rec.naics.len();
    if !(2..=6).contains(&n) || !rec.naics.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IngestError::InvalidNaics { line, value: rec.naics.clone() });
    }
    Ok(())
}

fn reader<R: Read>(stream: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(stream)
}

/// Positions of `columns` in the header, or a schema error naming the first
/// missing one.
fn column_positions<R: Read, const N: usize>(
    rdr: &mut csv::Reader<R>,
    file: &'static str,
    columns: [&'static str; N],
) -> Result<[usize; N], IngestError> {
    let header = rdr.headers()?.clone();
    let mut pos = [0usize; N];
    for (slot, column) in pos.iter_mut().zip(columns) {
        *slot = header.iter().position(|h| h == column).ok_or(IngestError::MissingColumn { file, column })?;
    }
    Ok(pos)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

fn field<'r>(rec: &'r csv::StringRecord, idx: usize, name: &str) -> Result<&'r str, String> {
    rec.get(idx).ok_or_else(|| format!("missing field `{name}`"))
}

fn parse_stop_row(rec: &csv::StringRecord, pos: &[usize; 4]) -> Result<StopRecord, String> {
    let device_id = field(rec, pos[0], "device_id")?;
    let poi_id = field(rec, pos[1], "poi_id")?;
    let start = field(rec, pos[2], "start_time")?;
    let dwell = field(rec, pos[3], "dwell")?;
    if device_id.is_empty() {
        return Err("empty device_id".into());
    }
    if poi_id.is_empty() {
        return Err("empty poi_id".into());
    }
    let start_time: i64 = start.parse().map_err(|_| format!("start_time `{start}` is not an integer epoch"))?;
    if DateTime::from_timestamp(start_time, 0).is_none() {
        return Err(format!("start_time {start_time} is outside the representable range"));
    }
    let dwell: u64 = dwell.parse().map_err(|_| format!("dwell `{dwell}` must be a non-negative integer"))?;
    Ok(StopRecord { device_id: device_id.to_owned(), poi_id: poi_id.to_owned(), start_time, dwell })
}

/// Parses a stops file. Malformed rows are collected in
/// [`Parsed::rejected`]; a missing column fails the whole file.
pub fn parse_stops<R: Read>(stream: R) -> Result<Parsed<StopRecord>, IngestError> {
    let mut rdr = reader(stream);
    let pos = column_positions(&mut rdr, "stops", STOPS_HEADER)?;
    let mut out = Parsed::default();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.rejected.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        match parse_stop_row(&rec, &pos) {
            Ok(s) => out.records.push(s),
            Err(message) => out.rejected.push(RowError { line: line_of(&rec), message }),
        }
    }
    Ok(out)
}

/// Keeps the stops whose dwell reaches `min_dwell`, preserving order.
pub fn filter_visits(stops: &[StopRecord], min_dwell: u64) -> Vec<StopRecord> {
    stops.iter().filter(|s| s.dwell >= min_dwell).cloned().collect()
}

/// Local calendar date of a UTC epoch under a fixed offset in hours.
pub fn local_date(epoch: i64, utc_offset_hours: i32) -> Option<NaiveDate> {
    let shifted = epoch.checked_add(i64::from(utc_offset_hours) * 3600)?;
    DateTime::from_timestamp(shifted, 0).map(|dt| dt.date_naive())
}

pub fn validate_utc_offset(hours: i32) -> Result<(), IngestError> {
    if (-23..=23).contains(&hours) {
        Ok(())
    } else {
        Err(IngestError::UtcOffset(hours))
    }
}

/// Keeps stops whose local start date lies in `first..=last`.
pub fn filter_window(
    stops: &[StopRecord],
    first: NaiveDate,
    last: NaiveDate,
    utc_offset_hours: i32,
) -> Vec<StopRecord> {
    stops
        .iter()
        .filter(|s| local_date(s.start_time, utc_offset_hours).is_some_and(|d| d >= first && d <= last))
        .cloned()
        .collect()
}

/// Drops stops at POIs the catalog does not know. Returns the kept stops
/// and the number dropped.
pub fn retain_cataloged(stops: &[StopRecord], catalog: &PoiCatalog) -> (Vec<StopRecord>, usize) {
    let kept: Vec<StopRecord> = stops.iter().filter(|s| catalog.contains(&s.poi_id)).cloned().collect();
    let dropped = stops.len() - kept.len();
    (kept, dropped)
}

/// Groups stops into per-device, per-local-day sequences.
///
/// Within a group stops are ordered by `(start_time, poi_id)`; consecutive
/// repeats of a POI collapse to one stay and groups left with fewer than
/// two stays are discarded. A stop spanning midnight belongs to the date it
/// started on. Output is sorted by `(device_id, local_date)`.
pub fn build_stay_sequences(stops: &[StopRecord], utc_offset_hours: i32) -> Vec<StaySequence> {
    let mut groups: BTreeMap<(&str, NaiveDate), Vec<(i64, &str)>> = BTreeMap::new();
    for s in stops {
        let Some(date) = local_date(s.start_time, utc_offset_hours) else {
            continue;
        };
        groups.entry((s.device_id.as_str(), date)).or_default().push((s.start_time, s.poi_id.as_str()));
    }
    let mut out = Vec::new();
    for ((device, date), mut visits) in groups {
        visits.sort_unstable();
        let mut stays: Vec<String> = Vec::with_capacity(visits.len());
        for (_, poi) in visits {
            if stays.last().map(String::as_str) != Some(poi) {
                stays.push(poi.to_owned());
            }
        }
        if stays.len() >= 2 {
            out.push(StaySequence { device_id: device.to_owned(), local_date: date, stays });
        }
    }
    out
}

fn parse_poi_row(rec: &csv::StringRecord, pos: &[usize; 5], line: u64) -> Result<PoiRecord, IngestError> {
    let get = |i: usize, name: &str| field(rec, pos[i], name).map_err(|message| IngestError::Row { line, message });
    let parse_coord = |i: usize, name: &'static str| -> Result<f64, IngestError> {
        let raw = get(i, name)?;
        raw.parse::<f64>().map_err(|_| IngestError::Row { line, message: format!("{name} `{raw}` is not a number") })
    };
    Ok(PoiRecord {
        poi_id: get(0, "poi_id")?.to_owned(),
        name: get(1, "name")?.to_owned(),
        lat: parse_coord(2, "lat")?,
        lon: parse_coord(3, "lon")?,
        naics: get(4, "naics")?.to_owned(),
    })
}

/// Loads a POI file. Any invalid row fails the load.
pub fn load_poi_catalog<R: Read>(stream: R) -> Result<PoiCatalog, IngestError> {
    let mut rdr = reader(stream);
    let pos = column_positions(&mut rdr, "POI", POIS_HEADER)?;
    let mut catalog = PoiCatalog::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let poi = parse_poi_row(&rec, &pos, line)?;
        catalog.insert(poi, line)?;
    }
    Ok(catalog)
}

pub fn write_stops<W: Write>(stream: W, stops: &[StopRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(STOPS_HEADER)?;
    for s in stops {
        w.write_record([s.device_id.as_str(), s.poi_id.as_str(), &s.start_time.to_string(), &s.dwell.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pois<W: Write>(stream: W, catalog: &PoiCatalog) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(POIS_HEADER)?;
    for p in catalog.iter() {
        w.write_record([p.poi_id.as_str(), p.name.as_str(), &p.lat.to_string(), &p.lon.to_string(), p.naics.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes sequences in long form, one row per stay.
pub fn write_sequences<W: Write>(stream: W, sequences: &[StaySequence]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(SEQUENCES_HEADER)?;
    for seq in sequences {
        let date = seq.local_date.to_string();
        for (i, poi) in seq.stays.iter().enumerate() {
            w.write_record([seq.device_id.as_str(), &date, &i.to_string(), poi.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads the long-form sequence file written by [`write_sequences`].
pub fn read_sequences<R: Read>(stream: R) -> Result<Vec<StaySequence>, IngestError> {
    let mut rdr = reader(stream);
    let pos = column_positions(&mut rdr, "sequences", SEQUENCES_HEADER)?;
    let mut grouped: BTreeMap<(String, NaiveDate), Vec<(usize, String)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = line_of(&rec);
        let bad = |message: String| IngestError::Row { line, message };
        let device = field(&rec, pos[0], "device_id").map_err(bad)?;
        let date = field(&rec, pos[1], "local_date").map_err(bad)?;
        let date: NaiveDate = date.parse().map_err(|_| bad(format!("bad date `{date}`")))?;
        let position = field(&rec, pos[2], "position").map_err(bad)?;
        let position: usize = position.parse().map_err(|_| bad(format!("bad position `{position}`")))?;
        let poi = field(&rec, pos[3], "poi_id").map_err(bad)?;
        grouped.entry((device.to_owned(), date)).or_default().push((position, poi.to_owned()));
    }
    let mut out = Vec::with_capacity(grouped.len());
    for ((device_id, local_date), mut stays) in grouped {
        stays.sort_by_key(|(p, _)| *p);
        let mut seen = HashSet::new();
        if !stays.iter().all(|(p, _)| seen.insert(*p)) {
            return Err(IngestError::Row {
                line: 0,
                message: format!("duplicate position in sequence {device_id}/{local_date}"),
            });
        }
        let stays: Vec<String> = stays.into_iter().map(|(_, p)| p).collect();
        if stays.len() < 2 || stays.windows(2).any(|w| w[0] == w[1]) {
            return Err(IngestError::Row {
                line: 0,
                message: format!("sequence {device_id}/{local_date} is not a valid stay sequence"),
            });
        }
        out.push(StaySequence { device_id, local_date, stays });
    }
    Ok(out)
}
