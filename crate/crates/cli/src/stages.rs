//! One function per subcommand. Each writes its outputs under `out` and
//! returns the paths it wrote, in a fixed order.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use placeweave::attributes::{
    attributed_census, canonical_key, category_frequency, load_naics_names, write_attributed_census,
    write_category_frequency, Digits,
};
use placeweave::ingest::{
    build_stay_sequences, filter_visits, filter_window, load_poi_catalog, parse_stops, read_sequences,
    retain_cataloged, validate_utc_offset, write_pois, write_sequences, write_stops, PoiCatalog, StaySequence,
};
use placeweave::metrics::{
    degree_distribution, fit_power_law, hurwitz_zeta, network_summary, poisson_reference, NetworkSummary, PowerLawFit,
};
use placeweave::motifs::{
    census_percentages, classify_trajectories, classify_trajectories_by_day, enumerate_induced, read_census,
    read_instances, write_census, write_instances, ClassCounts, InstanceRecord, InstanceTally, MotifCensus, MotifClass,
    MotifInstance,
};
use placeweave::netbuild::{
    build_daily_networks, build_network, load_network, save_network, NetworkMeta, NetworkMode, PlaceNetwork,
};
use placeweave::refnets::{generate, RefNetKind, RefNetSpec};
use placeweave::stats::{
    build_report, class_avg_distance, daily_census_series, distance_rows, motif_avg_distance, moving_average,
    pct_change_series, validate_report, DailySeries, DistanceItem, DistanceTable, DistanceWeighting, ReportInputs,
};
use placeweave::synth::{gen_catalog, gen_device_days, TrafficSpec, WorldSpec};
use placeweave::Exec;
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::config::CensusMode;
use crate::error::{CliError, CliResult};

const EXEC: Exec = Exec::Parallel;

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::at(dir, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::at(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::at(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::at(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::at(path, e))
}

/// Accepts either a file or a directory holding `default_name`.
fn resolve(path: &Path, default_name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default_name)
    } else {
        path.to_owned()
    }
}

fn load_catalog(path: &Path) -> CliResult<PoiCatalog> {
    load_poi_catalog(open(path)?).map_err(|e| CliError::at(path, e))
}

fn load_sequences(path: &Path) -> CliResult<Vec<StaySequence>> {
    let path = resolve(path, "sequences.csv");
    read_sequences(open(&path)?).map_err(|e| CliError::at(&path, e))
}

pub struct SynthArgs<'a> {
    pub world: &'a Path,
    pub traffic: &'a Path,
    pub seed: Option<u64>,
    pub out: &'a Path,
}

pub fn synth(args: &SynthArgs) -> CliResult<Vec<PathBuf>> {
    let mut world = WorldSpec::from_json(open(args.world)?).map_err(|e| CliError::at(args.world, e))?;
    let mut traffic = TrafficSpec::from_json(open(args.traffic)?).map_err(|e| CliError::at(args.traffic, e))?;
    if let Some(seed) = args.seed {
        world.seed = seed;
        traffic.seed = seed;
    }
    ensure_dir(args.out)?;
    let catalog = gen_catalog(&world)?;
    let generated = gen_device_days(&catalog, &traffic, EXEC)?;
    info!(
        pois = catalog.len(),
        device_days = generated.planted.len(),
        stops = generated.stops.len(),
        "generated world"
    );

    let (pois, stops, planted) = (args.out.join("pois.csv"), args.out.join("stops.csv"), args.out.join("planted.csv"));
    write_pois(create(&pois)?, &catalog)?;
    write_stops(create(&stops)?, &generated.stops)?;
    let mut w = csv::Writer::from_writer(create(&planted)?);
    w.write_record(["device_id", "local_date", "class", "pois"])?;
    for day in &generated.planted {
        w.write_record([day.device_id.as_str(), &day.local_date.to_string(), day.class.name(), &day.pois.join("|")])?;
    }
    w.flush()?;
    Ok(vec![pois, stops, planted])
}

pub struct IngestArgs<'a> {
    pub stops: &'a Path,
    pub pois: &'a Path,
    pub min_dwell: u64,
    pub utc_offset: i32,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub out: &'a Path,
}

/// Row accounting for one ingest run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub stop_rows: usize,
    pub rejected_rows: usize,
    pub below_min_dwell: usize,
    pub outside_window: usize,
    pub uncataloged: usize,
    pub visits: usize,
    pub sequences: usize,
    pub pois: usize,
}

pub fn ingest(args: &IngestArgs) -> CliResult<(IngestSummary, Vec<PathBuf>)> {
    validate_utc_offset(args.utc_offset)?;
    let catalog = load_catalog(args.pois)?;
    let parsed = parse_stops(open(args.stops)?).map_err(|e| CliError::at(args.stops, e))?;
    for err in parsed.rejected.iter().take(10) {
        warn!("{}: rejected line {}: {}", args.stops.display(), err.line, err.message);
    }
    if parsed.rejected.len() > 10 {
        warn!("{} more rejected rows", parsed.rejected.len() - 10);
    }
    let stop_rows = parsed.records.len() + parsed.rejected.len();
    let visits = filter_visits(&parsed.records, args.min_dwell);
    let below = parsed.records.len() - visits.len();
    let windowed = match (args.first_date, args.last_date) {
        (None, None) => visits,
        (first, last) => {
            filter_window(&visits, first.unwrap_or(NaiveDate::MIN), last.unwrap_or(NaiveDate::MAX), args.utc_offset)
        }
    };
    let outside_window = parsed.records.len() - below - windowed.len();
    let (kept, uncataloged) = retain_cataloged(&windowed, &catalog);
    let sequences = build_stay_sequences(&kept, args.utc_offset);
    let summary = IngestSummary {
        stop_rows,
        rejected_rows: parsed.rejected.len(),
        below_min_dwell: below,
        outside_window,
        uncataloged,
        visits: kept.len(),
        sequences: sequences.len(),
        pois: catalog.len(),
    };
    info!(?summary, "ingested stops");

    ensure_dir(args.out)?;
    let (seq_path, poi_path, sum_path) =
        (args.out.join("sequences.csv"), args.out.join("pois.csv"), args.out.join("ingest_summary.json"));
    write_sequences(create(&seq_path)?, &sequences)?;
    write_pois(create(&poi_path)?, &catalog)?;
    write_json(&sum_path, &summary)?;
    Ok((summary, vec![seq_path, poi_path, sum_path]))
}

pub struct NetworkArgs<'a> {
    pub sequences: &'a Path,
    pub mode: NetworkMode,
    pub daily: bool,
    pub out: &'a Path,
}

pub fn network(args: &NetworkArgs) -> CliResult<Vec<PathBuf>> {
    let sequences = load_sequences(args.sequences)?;
    if sequences.is_empty() {
        return Err(CliError::input("no stay sequences to build a network from"));
    }
    ensure_dir(args.out)?;
    let merged = build_network(&sequences, args.mode)?;
    info!(nodes = merged.node_count(), edges = merged.edge_count(), "built network");
    let path = args.out.join("network.csv");
    save_network(&path, &merged, &NetworkMeta::describe(&merged, args.mode.to_string()))?;
    let mut outputs = vec![path];
    if args.daily {
        let dir = args.out.join("daily");
        ensure_dir(&dir)?;
        for (date, net) in build_daily_networks(&sequences, args.mode, EXEC)? {
            let path = dir.join(format!("network_{date}.csv"));
            save_network(&path, &net, &NetworkMeta::describe(&net, args.mode.to_string()))?;
            outputs.push(path);
        }
    }
    Ok(outputs)
}

pub struct MetricsArgs<'a> {
    pub network: &'a Path,
    pub xmin: usize,
    /// Seed for size-matched reference networks; `None` skips them.
    pub references: Option<u64>,
    pub out: &'a Path,
}

#[derive(Serialize)]
struct ReferenceRow {
    k: usize,
    empirical_pdf: f64,
    poisson_pdf: Option<f64>,
    power_law_pdf: Option<f64>,
}

#[derive(Serialize)]
struct FitReport {
    power_law: Option<PowerLawFit>,
    power_law_error: Option<String>,
    poisson_rate: f64,
    reference: Vec<ReferenceRow>,
}

#[derive(Serialize)]
struct ReferenceNetwork {
    kind: RefNetKind,
    seed: u64,
    summary: NetworkSummary,
    power_law: Option<PowerLawFit>,
}

fn fit_report(net: &PlaceNetwork, xmin: usize) -> CliResult<FitReport> {
    let hist = degree_distribution(net)?;
    let (power_law, power_law_error) = match fit_power_law(&hist, xmin) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rate = hist.mean();
    let support: Vec<usize> = hist.counts.keys().copied().collect();
    let poisson: BTreeMap<usize, f64> =
        poisson_reference(rate, &support).map(|v| v.into_iter().collect()).unwrap_or_default();
    let reference = support
        .iter()
        .map(|&k| ReferenceRow {
            k,
            empirical_pdf: hist.pdf(k),
            poisson_pdf: poisson.get(&k).copied(),
            power_law_pdf: power_law.as_ref().filter(|f| k >= f.xmin).map(|f| {
                let tail = f.tail_size as f64 / hist.n as f64;
                tail * (k as f64).powf(-f.exponent) / hurwitz_zeta(f.exponent, f.xmin)
            }),
        })
        .collect();
    Ok(FitReport { power_law, power_law_error, poisson_rate: rate, reference })
}

pub fn metrics(args: &MetricsArgs) -> CliResult<Vec<PathBuf>> {
    let (net, _) = load_network(args.network).map_err(|e| CliError::at(args.network, e))?;
    let summary = network_summary(&net, EXEC)?;
    info!(?summary, "network metrics");
    ensure_dir(args.out)?;
    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &summary)?;

    let hist_path = args.out.join("degree_hist.csv");
    let mut w = csv::Writer::from_writer(create(&hist_path)?);
    w.write_record(["k", "count", "pdf", "ccdf"])?;
    for row in degree_distribution(&net)?.rows() {
        w.write_record([row.k.to_string(), row.count.to_string(), row.pdf.to_string(), row.ccdf.to_string()])?;
    }
    w.flush()?;

    let fit_path = args.out.join("fit.json");
    write_json(&fit_path, &fit_report(&net, args.xmin)?)?;
    let mut outputs = vec![summary_path, hist_path, fit_path];

    if let Some(seed) = args.references {
        let mut refs = Vec::new();
        for kind in [RefNetKind::Random, RefNetKind::ScaleFree] {
            let spec = RefNetSpec { kind, n: net.node_count(), target_average_degree: summary.average_degree, seed };
            match generate(&spec) {
                Ok(g) => {
                    let xmin = if kind == RefNetKind::ScaleFree { spec.edges_per_node() } else { 1 };
                    refs.push(ReferenceNetwork {
                        kind,
                        seed,
                        summary: network_summary(&g, EXEC)?,
                        power_law: fit_power_law(&degree_distribution(&g)?, xmin.max(1)).ok(),
                    });
                }
                Err(e) => warn!("skipping {kind} reference: {e}"),
            }
        }
        let path = args.out.join("references.json");
        write_json(&path, &refs)?;
        outputs.push(path);
    }
    Ok(outputs)
}

pub struct RefnetArgs<'a> {
    pub kind: RefNetKind,
    pub n: usize,
    pub avg_degree: f64,
    pub seed: u64,
    pub out: &'a Path,
}

pub fn refnet(args: &RefnetArgs) -> CliResult<Vec<PathBuf>> {
    let spec = RefNetSpec { kind: args.kind, n: args.n, target_average_degree: args.avg_degree, seed: args.seed };
    let net = generate(&spec)?;
    info!(kind = %args.kind, nodes = net.node_count(), edges = net.edge_count(), "generated reference network");
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut meta = NetworkMeta::describe(&net, args.kind.to_string());
    meta.generator = Some(spec.generator_meta());
    save_network(args.out, &net, &meta)?;
    Ok(vec![args.out.to_owned()])
}

pub struct MotifsArgs<'a> {
    pub network: Option<&'a Path>,
    /// Directory of `network_<date>.csv` files for daily enumeration.
    pub daily_networks: Option<&'a Path>,
    pub mode: CensusMode,
    pub sequences: Option<&'a Path>,
    pub pois: Option<&'a Path>,
    pub min_count: u64,
    pub weighting: DistanceWeighting,
    pub out: &'a Path,
}

/// Everything `census.csv` drops: the unfiltered census and how it was
/// made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusMeta {
    pub mode: CensusMode,
    pub min_count: u64,
    pub distance_weighting: Option<DistanceWeighting>,
    pub census: MotifCensus,
}

/// Checks that every class's flows equal its device-days times its edge
/// count.
pub fn check_flow_identity(census: &MotifCensus) -> CliResult<()> {
    for class in MotifClass::MOTIFS {
        let row = census.row(class);
        if row.flow_count != row.device_count * class.edge_count() as u64 {
            return Err(CliError::Invariant(format!(
                "{class}: flow_count {} != {} device-days x {} edges",
                row.flow_count,
                row.device_count,
                class.edge_count()
            )));
        }
    }
    Ok(())
}

fn distance_items(tallies: &[InstanceTally], km: &BTreeMap<&MotifInstance, f64>) -> Vec<DistanceItem> {
    tallies
        .iter()
        .filter_map(|t| {
            km.get(&t.instance).map(|&avg_km| DistanceItem {
                class: t.instance.class,
                avg_km,
                weekday_days: t.weekday_days,
                weekend_days: t.weekend_days,
            })
        })
        .collect()
}

fn with_distances(census: &MotifCensus, table: Option<&DistanceTable>) -> CliResult<MotifCensus> {
    let mut census = census_percentages(census)?;
    if let Some(table) = table {
        for (class, split) in &table.classes {
            census.row_mut(*class).avg_distance_km = split.total;
        }
    }
    Ok(census)
}

pub fn motifs(args: &MotifsArgs) -> CliResult<Vec<PathBuf>> {
    ensure_dir(args.out)?;
    let census_path = args.out.join("census.csv");
    let meta_path = args.out.join("census.meta.json");
    match args.mode {
        CensusMode::Enumerate => {
            let path = args.network.ok_or_else(|| CliError::input("enumerate mode needs --network"))?;
            let (net, _) = load_network(path).map_err(|e| CliError::at(path, e))?;
            let mut counts = ClassCounts::default();
            for k in 2..=4 {
                counts = counts.merge(enumerate_induced(&net, k, EXEC)?);
            }
            let census = census_percentages(&MotifCensus::from_counts(&counts))?;
            info!(subgraphs = counts.total(), "enumerated induced subgraphs");
            write_census(create(&census_path)?, &census, args.min_count)?;
            let meta = CensusMeta { mode: args.mode, min_count: args.min_count, distance_weighting: None, census };
            write_json(&meta_path, &meta)?;
            let mut outputs = vec![census_path, meta_path];
            if let Some(dir) = args.daily_networks {
                let daily_dir = args.out.join("daily");
                ensure_dir(&daily_dir)?;
                for (date, path) in daily_network_files(dir)? {
                    let (net, _) = load_network(&path).map_err(|e| CliError::at(&path, e))?;
                    let mut counts = ClassCounts::default();
                    for k in 2..=4 {
                        counts = counts.merge(enumerate_induced(&net, k, EXEC)?);
                    }
                    if counts.total() == 0 {
                        continue;
                    }
                    let path = daily_dir.join(format!("census_{date}.csv"));
                    write_census(create(&path)?, &census_percentages(&MotifCensus::from_counts(&counts))?, 0)?;
                    outputs.push(path);
                }
            }
            Ok(outputs)
        }
        CensusMode::Trajectory => {
            let path = args.sequences.ok_or_else(|| CliError::input("trajectory mode needs --sequences"))?;
            let sequences = load_sequences(path)?;
            let overall = classify_trajectories(&sequences, EXEC);
            check_flow_identity(&overall.census)?;
            if overall.census.global.motif_count == 0 {
                return Err(CliError::input("no device-day trajectories to classify"));
            }
            let catalog = args.pois.map(load_catalog).transpose()?;
            let mut km: BTreeMap<&MotifInstance, f64> = BTreeMap::new();
            if let Some(catalog) = &catalog {
                for t in &overall.instances {
                    km.insert(&t.instance, motif_avg_distance(&t.instance, catalog)?);
                }
            }
            let table = |tallies: &[InstanceTally]| -> CliResult<Option<DistanceTable>> {
                let items = distance_items(tallies, &km);
                if items.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(class_avg_distance(&items, args.weighting)?))
                }
            };
            let census = with_distances(&overall.census, table(&overall.instances)?.as_ref())?;
            info!(
                device_days = census.global.device_count,
                instances = overall.instances.len(),
                "classified trajectories"
            );
            write_census(create(&census_path)?, &census, args.min_count)?;
            let meta = CensusMeta {
                mode: args.mode,
                min_count: args.min_count,
                distance_weighting: Some(args.weighting),
                census,
            };
            write_json(&meta_path, &meta)?;

            let inst_path = args.out.join("instances.jsonl");
            let records: Vec<InstanceRecord> =
                overall.instances.iter().map(|t| InstanceRecord::from_tally(t, km.get(&t.instance).copied())).collect();
            write_instances(create(&inst_path)?, &records)?;
            let mut outputs = vec![census_path, meta_path, inst_path];

            let daily_dir = args.out.join("daily");
            ensure_dir(&daily_dir)?;
            for (date, day) in classify_trajectories_by_day(&sequences, EXEC) {
                check_flow_identity(&day.census)?;
                if day.census.global.motif_count == 0 {
                    continue;
                }
                let census = with_distances(&day.census, table(&day.instances)?.as_ref())?;
                let path = daily_dir.join(format!("census_{date}.csv"));
                write_census(create(&path)?, &census, 0)?;
                outputs.push(path);
            }
            Ok(outputs)
        }
    }
}

pub struct AttributedArgs<'a> {
    pub instances: &'a Path,
    pub pois: &'a Path,
    pub top_k: usize,
    pub naics_names: Option<&'a Path>,
    pub out: &'a Path,
}

pub fn attributed(args: &AttributedArgs) -> CliResult<Vec<PathBuf>> {
    let path = resolve(args.instances, "instances.jsonl");
    let records = read_instances(open(&path)?).map_err(|e| CliError::at(&path, e))?;
    let catalog = load_catalog(args.pois)?;
    let names = match args.naics_names {
        Some(p) => Some(load_naics_names(open(p)?).map_err(|e| CliError::at(p, e))?),
        None => None,
    };
    ensure_dir(args.out)?;

    let keyed = records
        .iter()
        .map(|r| Ok((canonical_key(&r.instance(), &catalog, Digits::Two)?, r.device_days)))
        .collect::<CliResult<Vec<_>>>()?;
    let census = attributed_census(keyed)?.top_k(args.top_k);
    let census_path = args.out.join("attributed_census.csv");
    write_attributed_census(create(&census_path)?, &census)?;
    let mut outputs = vec![census_path];

    let flows: Vec<(&str, &str, u64)> = records
        .iter()
        .flat_map(|r| {
            r.edges.iter().map(|&(a, b)| (r.nodes[a as usize].as_str(), r.nodes[b as usize].as_str(), r.device_days))
        })
        .collect();
    for (digits, name) in [(Digits::Two, "category_freq_2digit.csv"), (Digits::Four, "category_freq_4digit.csv")] {
        let freq = category_frequency(flows.iter().copied(), &catalog, digits, names.as_ref());
        if freq.unresolved > 0 {
            warn!(unresolved = freq.unresolved, "flow endpoints without a {name} category");
        }
        let path = args.out.join(name);
        write_category_frequency(create(&path)?, &freq)?;
        outputs.push(path);
    }
    Ok(outputs)
}

pub struct SeriesArgs<'a> {
    pub census_dir: &'a Path,
    pub window: usize,
    pub weighting: DistanceWeighting,
    pub summary: Option<&'a Path>,
    pub config: serde_json::Value,
    pub out: &'a Path,
    pub report: &'a Path,
}

fn write_series(path: &Path, series: &DailySeries) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["date", "day_type", "value"])?;
    for p in &series.points {
        let day_type = serde_json::to_value(p.day_type)?;
        w.write_record([
            p.date.to_string(),
            day_type.as_str().unwrap_or_default().to_owned(),
            p.value.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(date, path)` for every `<stem>_<date>.<ext>` file in `dir`, by date.
fn dated_files(dir: &Path, stem: &str, ext: &str) -> CliResult<BTreeMap<NaiveDate, PathBuf>> {
    let mut out = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in fs::read_dir(dir).map_err(|e| CliError::at(dir, e))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let Some(date) = name.strip_prefix(stem).and_then(|n| n.strip_suffix(ext)) else {
            continue;
        };
        let date: NaiveDate = date.parse().map_err(|e| CliError::at(&path, e))?;
        out.insert(date, path);
    }
    Ok(out)
}

fn daily_network_files(dir: &Path) -> CliResult<BTreeMap<NaiveDate, PathBuf>> {
    dated_files(dir, "network_", ".csv")
}

fn read_daily_censuses(dir: &Path) -> CliResult<BTreeMap<NaiveDate, MotifCensus>> {
    dated_files(dir, "census_", ".csv")?
        .into_iter()
        .map(|(date, path)| Ok((date, read_census(open(&path)?).map_err(|e| CliError::at(&path, e))?)))
        .collect()
}

pub fn series(args: &SeriesArgs) -> CliResult<Vec<PathBuf>> {
    let meta_path = args.census_dir.join("census.meta.json");
    let (census, mode) = if meta_path.exists() {
        let meta: CensusMeta = read_json(&meta_path)?;
        (meta.census, meta.mode.to_string())
    } else {
        let path = args.census_dir.join("census.csv");
        (read_census(open(&path)?).map_err(|e| CliError::at(&path, e))?, "unspecified".to_owned())
    };
    // Percentages are recomputed from the integer counts.
    let mut census_full = census_percentages(&census)?;
    for class in MotifClass::ALL {
        census_full.row_mut(class).avg_distance_km = census.row(class).avg_distance_km;
    }
    ensure_dir(args.out)?;
    let mut outputs = Vec::new();

    let daily = read_daily_censuses(&args.census_dir.join("daily"))?;
    if daily.len() < 2 {
        warn!(days = daily.len(), "fewer than two daily censuses, no series written");
    } else {
        for (class, s) in daily_census_series(&daily)? {
            let name = class.name();
            let mut emit = |stem: &str, series: &DailySeries| -> CliResult<()> {
                let path = args.out.join(format!("{stem}_{name}.csv"));
                write_series(&path, series)?;
                outputs.push(path);
                Ok(())
            };
            emit("counts", &s.counts)?;
            emit("pctchange", &pct_change_series(&s.counts)?)?;
            match moving_average(&s.counts, args.window) {
                Ok(ma) => emit("movavg", &ma)?,
                Err(e) => warn!("{name}: no moving average: {e}"),
            }
            if !s.distances.is_empty() {
                emit("distance", &s.distances)?;
                if s.distances.len() >= 2 {
                    emit("distance_pctchange", &pct_change_series(&s.distances)?)?;
                }
            }
        }
    }

    let mut distances = None;
    let inst_path = args.census_dir.join("instances.jsonl");
    if inst_path.exists() {
        let records = read_instances(open(&inst_path)?).map_err(|e| CliError::at(&inst_path, e))?;
        let items: Vec<DistanceItem> = records
            .iter()
            .filter_map(|r| {
                r.avg_km.map(|avg_km| DistanceItem {
                    class: r.class,
                    avg_km,
                    weekday_days: r.weekday_days,
                    weekend_days: r.weekend_days,
                })
            })
            .collect();
        if !items.is_empty() {
            let table = class_avg_distance(&items, args.weighting)?;
            let path = args.out.join("distance_table.csv");
            let mut w = csv::Writer::from_writer(create(&path)?);
            w.write_record(["class", "split", "km"])?;
            for row in distance_rows(&table) {
                w.write_record([row.class, row.split, row.km.to_string()])?;
            }
            w.flush()?;
            outputs.push(path);
            distances = Some(table);
        }
    }

    let summary: Option<NetworkSummary> = args.summary.map(read_json).transpose()?;
    let base = args.report.parent().unwrap_or(Path::new(""));
    let series_files =
        outputs.iter().map(|p| p.strip_prefix(base).unwrap_or(p).to_string_lossy().replace('\\', "/")).collect();
    let report = build_report(ReportInputs {
        config: Some(args.config.clone()),
        summary,
        census: Some(census_full),
        census_mode: mode,
        distances,
        series_files,
    })?;
    validate_report(&serde_json::to_value(&report)?).map_err(|problems| CliError::Invariant(problems.join("; ")))?;
    if let Some(dir) = args.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_json(args.report, &report)?;
    outputs.push(args.report.to_owned());
    Ok(outputs)
}
