//! Seeded synthetic worlds: a POI catalog plus device-day stop records
//! whose trajectories induce planted motif classes.
//!
//! Each device-day visits the POIs of its class along a fixed walk, so the
//! consecutive-pair trajectory graph equals the class's edge set exactly:
//!
//! | class | walk over local positions |
//! |-------|---------------------------|
//! | M2-1  | 0 1                       |
//! | M3-1  | 0 1 2                     |
//! | M3-2  | 0 1 2 0                   |
//! | M4-1  | 0 1 2 3 0 2 1 3           |
//! | M4-2  | 0 2 1 3 0 1               |
//! | M4-3  | 0 1 2 3 0                 |
//! | M4-4  | 3 2 0 1 2                 |
//! | M4-5  | 0 1 2 3                   |
//! | M4-6  | 1 0 2 0 3                 |
//!
//! Device-day `i` draws from its own ChaCha8 stream `i` under the traffic
//! seed, so sequential and parallel generation agree.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attributes::sector_by_code;
use crate::exec::{map_range, Exec};
use crate::ingest::{PoiCatalog, PoiRecord, StopRecord, DEFAULT_MIN_DWELL};
use crate::motifs::MotifClass;
use crate::stats::{haversine_km, EARTH_RADIUS_KM};

/// Tolerance on probability vectors summing to one.
const SHARE_TOLERANCE: f64 = 1e-9;
/// Travel gap between consecutive stays, seconds.
const GAP_RANGE: (u64, u64) = (300, 1200);
/// Local time of the first stay, seconds after midnight.
const DAY_START: i64 = 6 * 3600;
const MAX_ANCHOR_TRIES: usize = 64;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("catalog has {have} POIs, {need} needed")]
    CatalogTooSmall { have: usize, need: usize },
    #[error("no {k} POIs lie within {radius_km} km of each other")]
    Radius { k: usize, radius_km: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub n_pois: usize,
    pub bbox: BoundingBox,
    /// Sector code (for example `"44-45"` or `"72"`) to probability.
    pub category_shares: BTreeMap<String, f64>,
    pub seed: u64,
}

fn default_dwell_range() -> (u64, u64) {
    (600, 3600)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn days(&self) -> Vec<NaiveDate> {
        self.start.iter_days().take_while(|d| *d <= self.end).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub n_device_days: usize,
    pub class_mix: BTreeMap<MotifClass, f64>,
    pub date_range: DateRange,
    #[serde(default = "default_dwell_range")]
    pub dwell_range: (u64, u64),
    pub seed: u64,
    #[serde(default)]
    pub utc_offset: i32,
    /// When set, every pair of POIs in a device-day lies within this many km.
    #[serde(default)]
    pub max_radius_km: Option<f64>,
}

fn check_shares<'a>(what: &str, shares: impl Iterator<Item = &'a f64>) -> Result<(), SynthError> {
    let mut sum = 0.0;
    for &p in shares {
        if !(p.is_finite() && p >= 0.0) {
            return Err(SynthError::Spec(format!("{what} has invalid probability {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > SHARE_TOLERANCE {
        return Err(SynthError::Spec(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl WorldSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let b = &self.bbox;
        let ordered = b.lat_min < b.lat_max && b.lon_min < b.lon_max;
        let inside = b.lat_min >= -90.0 && b.lat_max <= 90.0 && b.lon_min >= -180.0 && b.lon_max <= 180.0;
        if !(ordered && inside) {
            return Err(SynthError::Spec(format!("degenerate or out-of-range bbox {b:?}")));
        }
        if self.n_pois == 0 {
            return Err(SynthError::Spec("n_pois must be positive".into()));
        }
        for code in self.category_shares.keys() {
            sector_by_code(code).map_err(|e| SynthError::Spec(e.to_string()))?;
        }
        check_shares("category_shares", self.category_shares.values())
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self, SynthError> {
        let spec: WorldSpec = serde_json::from_reader(reader)?;
        spec.validate()?;
        Ok(spec)
    }
}

impl TrafficSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.class_mix.contains_key(&MotifClass::Other) {
            return Err(SynthError::Spec("class_mix may not contain OTHER".into()));
        }
        check_shares("class_mix", self.class_mix.values())?;
        if self.date_range.end < self.date_range.start {
            return Err(SynthError::Spec("date_range is empty".into()));
        }
        let (lo, hi) = self.dwell_range;
        if lo > hi || lo < DEFAULT_MIN_DWELL {
            return Err(SynthError::Spec(format!(
                "dwell_range ({lo}, {hi}) must be ordered with a minimum of at least {DEFAULT_MIN_DWELL} s"
            )));
        }
        // Eight stays at the longest dwell and gap must fit in the day.
        if DAY_START + 8 * (hi + GAP_RANGE.1) as i64 >= 24 * 3600 {
            return Err(SynthError::Spec(format!("dwell maximum {hi} s does not fit eight stays in a day")));
        }
        if !(-23..=23).contains(&self.utc_offset) {
            return Err(SynthError::Spec(format!("utc_offset {} is outside -23..=23", self.utc_offset)));
        }
        if let Some(r) = self.max_radius_km {
            if !(r.is_finite() && r > 0.0) {
                return Err(SynthError::Spec(format!("max_radius_km {r} must be positive")));
            }
        }
        Ok(())
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self, SynthError> {
        let spec: TrafficSpec = serde_json::from_reader(reader)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn round_micro(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Places `n_pois` POIs uniformly in the bounding box with sector codes
/// drawn from the category shares.
pub fn gen_catalog(spec: &WorldSpec) -> Result<PoiCatalog, SynthError> {
    spec.validate()?;
    let sectors: Vec<_> = spec.category_shares.keys().map(|c| sector_by_code(c).expect("validated")).collect();
    let weights = WeightedIndex::new(spec.category_shares.values().copied())
        .map_err(|e| SynthError::Spec(format!("category_shares: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let b = spec.bbox;
    let mut records = Vec::with_capacity(spec.n_pois);
    for i in 0..spec.n_pois {
        let lat = round_micro(rng.gen_range(b.lat_min..=b.lat_max)).clamp(b.lat_min, b.lat_max);
        let lon = round_micro(rng.gen_range(b.lon_min..=b.lon_max)).clamp(b.lon_min, b.lon_max);
        let sector = sectors[weights.sample(&mut rng)];
        let prefix = sector.prefixes[rng.gen_range(0..sector.prefixes.len())];
        let naics = format!("{prefix}{:02}", rng.gen_range(0..100));
        records.push(PoiRecord {
            poi_id: format!("poi{i:06}"),
            name: format!("{} {i}", sector.label),
            lat,
            lon,
            naics,
        });
    }
    Ok(PoiCatalog::from_records(records).expect("generated ids are unique and valid"))
}

/// Walk over local positions whose consecutive pairs form the class's
/// edge set.
pub fn canonical_walk(class: MotifClass) -> &'static [usize] {
    match class {
        MotifClass::M2_1 => &[0, 1],
        MotifClass::M3_1 => &[0, 1, 2],
        MotifClass::M3_2 => &[0, 1, 2, 0],
        MotifClass::M4_1 => &[0, 1, 2, 3, 0, 2, 1, 3],
        MotifClass::M4_2 => &[0, 2, 1, 3, 0, 1],
        MotifClass::M4_3 => &[0, 1, 2, 3, 0],
        MotifClass::M4_4 => &[3, 2, 0, 1, 2],
        MotifClass::M4_5 => &[0, 1, 2, 3],
        MotifClass::M4_6 => &[1, 0, 2, 0, 3],
        MotifClass::Other => &[],
    }
}

/// The class assigned to one synthetic device-day.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedDay {
    pub device_id: String,
    pub local_date: NaiveDate,
    pub class: MotifClass,
    /// POIs in walk-position order.
    pub pois: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Traffic {
    pub stops: Vec<StopRecord>,
    pub planted: Vec<PlantedDay>,
}

/// POIs ordered by latitude for radius-bounded sampling.
struct LatIndex {
    by_lat: Vec<(f64, f64, usize)>,
}

impl LatIndex {
    fn new(pois: &[&PoiRecord]) -> Self {
        let mut by_lat: Vec<_> = pois.iter().enumerate().map(|(i, p)| (p.lat, p.lon, i)).collect();
        by_lat.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        LatIndex { by_lat }
    }

    /// Indices within `r_km` of `anchor`, in ascending index order.
    fn within(&self, anchor: (f64, f64), r_km: f64) -> Vec<usize> {
        let dlat = (r_km / EARTH_RADIUS_KM).to_degrees();
        let lo = self.by_lat.partition_point(|p| p.0 < anchor.0 - dlat);
        let hi = self.by_lat.partition_point(|p| p.0 <= anchor.0 + dlat);
        let mut out: Vec<usize> = self.by_lat[lo..hi]
            .iter()
            .filter(|p| haversine_km(anchor.0, anchor.1, p.0, p.1).is_ok_and(|d| d <= r_km))
            .map(|p| p.2)
            .collect();
        out.sort_unstable();
        out
    }
}

fn sample_pois(
    rng: &mut ChaCha8Rng,
    pois: &[&PoiRecord],
    k: usize,
    radius: Option<(&LatIndex, f64)>,
) -> Result<Vec<usize>, SynthError> {
    let Some((lat_index, r)) = radius else {
        return Ok(index::sample(rng, pois.len(), k).into_vec());
    };
    for _ in 0..MAX_ANCHOR_TRIES {
        let anchor = rng.gen_range(0..pois.len());
        // Every candidate is within r/2 of the anchor, so pairs are within r.
        let near: Vec<usize> = lat_index
            .within((pois[anchor].lat, pois[anchor].lon), r / 2.0)
            .into_iter()
            .filter(|&i| i != anchor)
            .collect();
        if near.len() + 1 >= k {
            let mut chosen = vec![anchor];
            chosen.extend(index::sample(rng, near.len(), k - 1).into_iter().map(|j| near[j]));
            return Ok(chosen);
        }
    }
    Err(SynthError::Radius { k, radius_km: r })
}

/// Emits stop records for `spec.n_device_days` device-days.
///
/// Device-day `i` falls on date `i mod D` of the range (D days) and belongs
/// to device `i div D`.
pub fn gen_device_days(catalog: &PoiCatalog, spec: &TrafficSpec, exec: Exec) -> Result<Traffic, SynthError> {
    spec.validate()?;
    let need = spec.class_mix.iter().filter(|(_, &p)| p > 0.0).map(|(c, _)| c.size()).max().unwrap_or(0);
    if catalog.len() < need.max(4) {
        return Err(SynthError::CatalogTooSmall { have: catalog.len(), need: need.max(4) });
    }
    let classes: Vec<MotifClass> = spec.class_mix.keys().copied().collect();
    let weights = WeightedIndex::new(spec.class_mix.values().copied())
        .map_err(|e| SynthError::Spec(format!("class_mix: {e}")))?;
    let pois: Vec<&PoiRecord> = catalog.iter().collect();
    let lat_index = spec.max_radius_km.map(|_| LatIndex::new(&pois));
    let radius = lat_index.as_ref().zip(spec.max_radius_km);
    let days = spec.date_range.days();
    let width = spec.n_device_days.div_ceil(days.len()).max(1).to_string().len();

    let one_day = |i: usize| -> Result<(PlantedDay, Vec<StopRecord>), SynthError> {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(i as u64);
        let date = days[i % days.len()];
        let device_id = format!("dev{:0width$}", i / days.len());
        let class = classes[weights.sample(&mut rng)];
        let chosen = sample_pois(&mut rng, &pois, class.size(), radius)?;
        let ids: Vec<String> = chosen.iter().map(|&j| pois[j].poi_id.clone()).collect();
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp();
        let mut t = midnight - i64::from(spec.utc_offset) * 3600 + DAY_START;
        let mut stops = Vec::new();
        for &pos in canonical_walk(class) {
            let dwell = rng.gen_range(spec.dwell_range.0..=spec.dwell_range.1);
            stops.push(StopRecord { device_id: device_id.clone(), poi_id: ids[pos].clone(), start_time: t, dwell });
            t += (dwell + rng.gen_range(GAP_RANGE.0..=GAP_RANGE.1)) as i64;
        }
        Ok((PlantedDay { device_id, local_date: date, class, pois: ids }, stops))
    };

    let mut traffic = Traffic::default();
    for day in map_range(spec.n_device_days, exec, one_day) {
        let (planted, stops) = day?;
        traffic.planted.push(planted);
        traffic.stops.extend(stops);
    }
    Ok(traffic)
}
