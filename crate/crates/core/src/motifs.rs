//! Classification and counting of connected 2- to 4-node subgraphs.
//!
//! Two counting modes share one classifier:
//!
//! * enumeration: every connected node-induced subgraph of a network, found
//!   with ESU (exclusive-neighborhood expansion from each root vertex, so each
//!   vertex set is emitted exactly once);
//! * trajectory: each device-day's stay sequence becomes a small graph
//!   (distinct POIs, deduplicated consecutive pairs) and is classified.
//!
//! For connected graphs on at most four vertices the sorted degree sequence
//! is a complete isomorphism invariant, which is what [`classify_graph`]
//! relies on.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{fold_range, map_slice, Exec};
use crate::ingest::StaySequence;
use crate::netbuild::PlaceNetwork;
use crate::stats::DayType;

#[derive(Debug, Error)]
pub enum MotifError {
    #[error("motif size {0} is outside 2..=4")]
    Size(usize),
    #[error("edge ({0}, {1}) is not a valid simple edge on {2} vertices")]
    InvalidEdge(usize, usize, usize),
    #[error("census has zero motifs in total")]
    ZeroTotal,
    #[error("unknown motif class `{0}`")]
    UnknownClass(String),
    #[error("census file is missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The nine connected shapes on two to four vertices, plus `Other` for
/// anything else (disconnected, or more than four vertices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MotifClass {
    /// Single edge.
    M2_1,
    /// Path on three vertices.
    M3_1,
    /// Triangle.
    M3_2,
    /// Complete graph K4.
    M4_1,
    /// K4 minus one edge (chordal 4-cycle).
    M4_2,
    /// 4-cycle.
    M4_3,
    /// Triangle with a pendant vertex.
    M4_4,
    /// Path on four vertices.
    M4_5,
    /// Star with three leaves.
    M4_6,
    Other,
}

impl MotifClass {
    pub const COUNT: usize = 10;

    /// All classes, `Other` last.
    pub const ALL: [MotifClass; Self::COUNT] = [
        MotifClass::M2_1,
        MotifClass::M3_1,
        MotifClass::M3_2,
        MotifClass::M4_1,
        MotifClass::M4_2,
        MotifClass::M4_3,
        MotifClass::M4_4,
        MotifClass::M4_5,
        MotifClass::M4_6,
        MotifClass::Other,
    ];

    /// The nine proper motif classes.
    pub const MOTIFS: [MotifClass; 9] = [
        MotifClass::M2_1,
        MotifClass::M3_1,
        MotifClass::M3_2,
        MotifClass::M4_1,
        MotifClass::M4_2,
        MotifClass::M4_3,
        MotifClass::M4_4,
        MotifClass::M4_5,
        MotifClass::M4_6,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Vertex count; 0 for `Other`.
    pub fn size(self) -> usize {
        match self {
            MotifClass::M2_1 => 2,
            MotifClass::M3_1 | MotifClass::M3_2 => 3,
            MotifClass::Other => 0,
            _ => 4,
        }
    }

    /// Edge count; 0 for `Other`.
    pub fn edge_count(self) -> usize {
        match self {
            MotifClass::M2_1 => 1,
            MotifClass::M3_1 => 2,
            MotifClass::M3_2 => 3,
            MotifClass::M4_1 => 6,
            MotifClass::M4_2 => 5,
            MotifClass::M4_3 | MotifClass::M4_4 => 4,
            MotifClass::M4_5 | MotifClass::M4_6 => 3,
            MotifClass::Other => 0,
        }
    }

    /// Sorted degree sequence that identifies the class.
    pub fn degree_sequence(self) -> &'static [usize] {
        match self {
            MotifClass::M2_1 => &[1, 1],
            MotifClass::M3_1 => &[1, 1, 2],
            MotifClass::M3_2 => &[2, 2, 2],
            MotifClass::M4_1 => &[3, 3, 3, 3],
            MotifClass::M4_2 => &[2, 2, 3, 3],
            MotifClass::M4_3 => &[2, 2, 2, 2],
            MotifClass::M4_4 => &[1, 2, 2, 3],
            MotifClass::M4_5 => &[1, 1, 2, 2],
            MotifClass::M4_6 => &[1, 1, 1, 3],
            MotifClass::Other => &[],
        }
    }

    /// A labeled representative on vertices `0..size`.
    pub fn representative_edges(self) -> &'static [(usize, usize)] {
        match self {
            MotifClass::M2_1 => &[(0, 1)],
            MotifClass::M3_1 => &[(0, 1), (1, 2)],
            MotifClass::M3_2 => &[(0, 1), (1, 2), (0, 2)],
            MotifClass::M4_1 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            MotifClass::M4_2 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)],
            MotifClass::M4_3 => &[(0, 1), (1, 2), (2, 3), (3, 0)],
            MotifClass::M4_4 => &[(0, 1), (1, 2), (0, 2), (2, 3)],
            MotifClass::M4_5 => &[(0, 1), (1, 2), (2, 3)],
            MotifClass::M4_6 => &[(0, 1), (0, 2), (0, 3)],
            MotifClass::Other => &[],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MotifClass::M2_1 => "M2-1",
            MotifClass::M3_1 => "M3-1",
            MotifClass::M3_2 => "M3-2",
            MotifClass::M4_1 => "M4-1",
            MotifClass::M4_2 => "M4-2",
            MotifClass::M4_3 => "M4-3",
            MotifClass::M4_4 => "M4-4",
            MotifClass::M4_5 => "M4-5",
            MotifClass::M4_6 => "M4-6",
            MotifClass::Other => "OTHER",
        }
    }
}

impl fmt::Display for MotifClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MotifClass {
    type Err = MotifError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        MotifClass::ALL.into_iter().find(|c| c.name() == norm).ok_or_else(|| MotifError::UnknownClass(s.to_owned()))
    }
}

impl Serialize for MotifClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for MotifClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Class of a connected graph from its vertex count, edge count and maximum
/// degree. Callers guarantee connectivity and `2 <= n <= 4`.
#[inline]
fn class_of_connected(n: usize, edges: usize, max_degree: usize) -> MotifClass {
    match (n, edges) {
        (2, _) => MotifClass::M2_1,
        (3, 2) => MotifClass::M3_1,
        (3, 3) => MotifClass::M3_2,
        (4, 3) if max_degree == 3 => MotifClass::M4_6,
        (4, 3) => MotifClass::M4_5,
        (4, 4) if max_degree == 3 => MotifClass::M4_4,
        (4, 4) => MotifClass::M4_3,
        (4, 5) => MotifClass::M4_2,
        (4, 6) => MotifClass::M4_1,
        _ => MotifClass::Other,
    }
}

/// Classifies a simple undirected graph on vertices `0..n`, `2 <= n <= 4`.
/// Disconnected graphs are [`MotifClass::Other`].
pub fn classify_graph(n: usize, edges: &[(usize, usize)]) -> Result<MotifClass, MotifError> {
    if !(2..=4).contains(&n) {
        return Err(MotifError::Size(n));
    }
    let mut adj = [[false; 4]; 4];
    for &(a, b) in edges {
        if a >= n || b >= n || a == b || adj[a][b] {
            return Err(MotifError::InvalidEdge(a, b, n));
        }
        adj[a][b] = true;
        adj[b][a] = true;
    }
    // Reachability from vertex 0.
    let mut seen = [false; 4];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if adj[v][u] && !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    if seen[..n].iter().any(|s| !s) {
        return Ok(MotifClass::Other);
    }
    let mut degrees: Vec<usize> = (0..n).map(|v| adj[v].iter().filter(|&&x| x).count()).collect();
    degrees.sort_unstable();
    Ok(MotifClass::MOTIFS.into_iter().find(|c| c.degree_sequence() == degrees.as_slice()).unwrap_or(MotifClass::Other))
}

/// Per-class integer counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts(pub [u64; MotifClass::COUNT]);

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MotifClass, u64)> + '_ {
        MotifClass::ALL.into_iter().zip(self.0.iter().copied())
    }

    pub fn merge(mut self, other: ClassCounts) -> ClassCounts {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
        self
    }
}

impl Index<MotifClass> for ClassCounts {
    type Output = u64;

    fn index(&self, c: MotifClass) -> &u64 {
        &self.0[c.index()]
    }
}

impl IndexMut<MotifClass> for ClassCounts {
    fn index_mut(&mut self, c: MotifClass) -> &mut u64 {
        &mut self.0[c.index()]
    }
}

/// Class of the subgraph induced by `nodes` (connected by construction).
#[inline]
fn induced_class(net: &PlaceNetwork, nodes: &[u32]) -> MotifClass {
    let mut deg = [0usize; 4];
    let mut edges = 0;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if net.has_edge(nodes[i], nodes[j]) {
                deg[i] += 1;
                deg[j] += 1;
                edges += 1;
            }
        }
    }
    class_of_connected(nodes.len(), edges, deg.iter().copied().max().unwrap_or(0))
}

/// ESU expansion below `sub[..size]`, calling `emit` for each completed
/// `k`-set.
fn extend<F: FnMut(&[u32])>(
    net: &PlaceNetwork,
    k: usize,
    sub: &mut [u32; 4],
    size: usize,
    ext: &[u32],
    root: u32,
    emit: &mut F,
) {
    if size + 1 == k {
        for &w in ext {
            sub[size] = w;
            emit(&sub[..k]);
        }
        return;
    }
    let mut next: Vec<u32> = Vec::new();
    for (i, &w) in ext.iter().enumerate() {
        next.clear();
        next.extend_from_slice(&ext[i + 1..]);
        for &(u, _) in net.neighbors(w) {
            if u <= root {
                continue;
            }
            // Exclusive: neither in the current subgraph nor adjacent to it.
            let current = &sub[..size];
            if current.contains(&u) || current.iter().any(|&s| net.has_edge(s, u)) {
                continue;
            }
            next.push(u);
        }
        sub[size] = w;
        extend(net, k, sub, size + 1, &next, root, emit);
    }
}

fn extend_root<F: FnMut(&[u32])>(net: &PlaceNetwork, k: usize, root: u32, emit: &mut F) {
    let ext: Vec<u32> = net.neighbors(root).iter().map(|&(u, _)| u).filter(|&u| u > root).collect();
    let mut sub = [root, 0, 0, 0];
    extend(net, k, &mut sub, 1, &ext, root, emit);
}

fn check_k(k: usize) -> Result<(), MotifError> {
    if (2..=4).contains(&k) {
        Ok(())
    } else {
        Err(MotifError::Size(k))
    }
}

/// Calls `visit` once per connected induced `k`-vertex subgraph, with its
/// vertex indices (root first) and class. Sequential.
pub fn for_each_induced<F: FnMut(&[u32], MotifClass)>(
    net: &PlaceNetwork,
    k: usize,
    mut visit: F,
) -> Result<(), MotifError> {
    check_k(k)?;
    for root in 0..net.node_count() as u32 {
        extend_root(net, k, root, &mut |nodes| visit(nodes, induced_class(net, nodes)));
    }
    Ok(())
}

/// Counts every connected induced `k`-vertex subgraph by class.
///
/// Roots are processed independently, so with [`Exec::Parallel`] the work
/// splits by root vertex and per-worker counters are summed.
pub fn enumerate_induced(net: &PlaceNetwork, k: usize, exec: Exec) -> Result<ClassCounts, MotifError> {
    check_k(k)?;
    Ok(fold_range(
        net.node_count(),
        exec,
        ClassCounts::default,
        |mut acc, root| {
            extend_root(net, k, root as u32, &mut |nodes| acc[induced_class(net, nodes)] += 1);
            acc
        },
        ClassCounts::merge,
    ))
}

/// A classified subgraph occurrence. `edges` index into `nodes`, which is
/// sorted; pairs are `(low, high)` and sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MotifInstance {
    pub class: MotifClass,
    pub nodes: Vec<String>,
    pub edges: Vec<(u8, u8)>,
}

impl MotifInstance {
    /// Builds an instance from arbitrary node order and edges given as pairs
    /// of node ids, normalizing the representation and classifying it.
    pub fn from_id_edges(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self, MotifError> {
        let mut sorted: Vec<String> = nodes.iter().map(|s| s.to_string()).collect();
        sorted.sort();
        sorted.dedup();
        let pos = |id: &str| sorted.iter().position(|s| s == id);
        let mut local = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            let (Some(a), Some(b)) = (pos(a), pos(b)) else {
                return Err(MotifError::InvalidEdge(0, 0, sorted.len()));
            };
            local.push((a.min(b), a.max(b)));
        }
        local.sort_unstable();
        let class = classify_graph(sorted.len(), &local)?;
        Ok(MotifInstance { class, nodes: sorted, edges: local.into_iter().map(|(a, b)| (a as u8, b as u8)).collect() })
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.nodes.len()];
        for &(a, b) in &self.edges {
            d[a as usize] += 1;
            d[b as usize] += 1;
        }
        d
    }
}

/// A trajectory instance with the device-days that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceTally {
    pub instance: MotifInstance,
    pub device_days: u64,
    pub weekday_days: u64,
    pub weekend_days: u64,
}

/// Aggregates for one class: instances, devices, flows and share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    /// Distinct instances.
    pub motif_count: u64,
    /// Device-days covered.
    pub device_count: u64,
    /// Visit flows: deduplicated trajectory edges summed over device-days.
    pub flow_count: u64,
    pub percentage: Option<f64>,
    pub avg_distance_km: Option<f64>,
}

/// Per-class aggregates plus global totals. `global` also counts
/// trajectories that fall outside the nine classes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MotifCensus {
    pub global: CensusRow,
    pub rows: [CensusRow; MotifClass::COUNT],
}

impl MotifCensus {
    pub fn row(&self, class: MotifClass) -> &CensusRow {
        &self.rows[class.index()]
    }

    pub fn row_mut(&mut self, class: MotifClass) -> &mut CensusRow {
        &mut self.rows[class.index()]
    }

    /// Enumeration-mode census: motif counts only, no devices or flows.
    pub fn from_counts(counts: &ClassCounts) -> Self {
        let mut census = MotifCensus::default();
        for (class, n) in counts.iter() {
            census.row_mut(class).motif_count = n;
        }
        census.global.motif_count = counts.total();
        census
    }
}

/// Fills `percentage = 100 · motif_count / global motif_count` for every
/// class.
pub fn census_percentages(census: &MotifCensus) -> Result<MotifCensus, MotifError> {
    let total = census.global.motif_count;
    if total == 0 {
        return Err(MotifError::ZeroTotal);
    }
    let mut out = census.clone();
    for row in out.rows.iter_mut() {
        row.percentage = Some(100.0 * row.motif_count as f64 / total as f64);
    }
    Ok(out)
}

/// Result of classifying device-day trajectories.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryCensus {
    /// Instances of the nine classes, sorted by instance.
    pub instances: Vec<InstanceTally>,
    pub census: MotifCensus,
}

/// The trajectory graph of one stay sequence: sorted distinct POIs and
/// sorted, deduplicated consecutive pairs as local index pairs.
fn trajectory_graph(seq: &StaySequence) -> (Vec<&str>, Vec<(u32, u32)>) {
    let mut nodes: Vec<&str> = seq.stays.iter().map(String::as_str).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let pos = |id: &str| nodes.binary_search(&id).expect("stay is a node") as u32;
    let mut edges: Vec<(u32, u32)> = seq
        .stays
        .windows(2)
        .map(|w| {
            let (a, b) = (pos(&w[0]), pos(&w[1]));
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    (nodes, edges)
}

struct Classified<'a> {
    nodes: Vec<&'a str>,
    edges: Vec<(u32, u32)>,
    class: MotifClass,
    weekend: bool,
}

fn classify_one(seq: &StaySequence) -> Classified<'_> {
    let (nodes, edges) = trajectory_graph(seq);
    let class = if (2..=4).contains(&nodes.len()) {
        let local: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
        classify_graph(nodes.len(), &local).unwrap_or(MotifClass::Other)
    } else {
        MotifClass::Other
    };
    Classified { nodes, edges, class, weekend: DayType::of(seq.local_date) == DayType::Weekend }
}

/// Classifies each device-day trajectory and aggregates by instance
/// `(node set, edge set)`.
///
/// Per class: `motif_count` counts distinct instances, `device_count` the
/// contributing device-days, and `flow_count` is `device_count` times the
/// class edge count. Trajectories with more than four POIs land in
/// [`MotifClass::Other`] and the global totals only.
pub fn classify_trajectories(sequences: &[StaySequence], exec: Exec) -> TrajectoryCensus {
    let classified = map_slice(sequences, exec, classify_one);

    #[derive(Default)]
    struct Acc {
        class: Option<MotifClass>,
        edges: u64,
        days: u64,
        weekend: u64,
    }
    type InstanceKey<'a> = (Vec<&'a str>, Vec<(u32, u32)>);
    let mut by_key: BTreeMap<InstanceKey, Acc> = BTreeMap::new();
    for c in classified {
        let edges = c.edges.len() as u64;
        let acc = by_key.entry((c.nodes, c.edges)).or_default();
        acc.class = Some(c.class);
        acc.edges = edges;
        acc.days += 1;
        acc.weekend += u64::from(c.weekend);
    }

    let mut out = TrajectoryCensus::default();
    for ((nodes, edges), acc) in by_key {
        let class = acc.class.unwrap_or(MotifClass::Other);
        let row = out.census.row_mut(class);
        row.motif_count += 1;
        row.device_count += acc.days;
        row.flow_count += acc.days * acc.edges;
        out.census.global.motif_count += 1;
        out.census.global.device_count += acc.days;
        out.census.global.flow_count += acc.days * acc.edges;
        if class != MotifClass::Other {
            out.instances.push(InstanceTally {
                instance: MotifInstance {
                    class,
                    nodes: nodes.iter().map(|s| s.to_string()).collect(),
                    edges: edges.iter().map(|&(a, b)| (a as u8, b as u8)).collect(),
                },
                device_days: acc.days,
                weekday_days: acc.days - acc.weekend,
                weekend_days: acc.weekend,
            });
        }
    }
    out.instances.sort_by(|a, b| a.instance.cmp(&b.instance));
    out
}

/// [`classify_trajectories`] separately for each local date.
pub fn classify_trajectories_by_day(sequences: &[StaySequence], exec: Exec) -> BTreeMap<NaiveDate, TrajectoryCensus> {
    let mut by_day: BTreeMap<NaiveDate, Vec<StaySequence>> = BTreeMap::new();
    for s in sequences {
        by_day.entry(s.local_date).or_default().push(s.clone());
    }
    let days: Vec<(NaiveDate, Vec<StaySequence>)> = by_day.into_iter().collect();
    map_slice(&days, exec, |(date, seqs)| (*date, classify_trajectories(seqs, Exec::Sequential))).into_iter().collect()
}

pub const CENSUS_HEADER: [&str; 6] =
    ["class", "motif_count", "device_count", "flow_count", "percentage", "avg_distance"];

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `census.csv`: the global row, then each class whose motif count
/// reaches `min_count`.
pub fn write_census<W: Write>(stream: W, census: &MotifCensus, min_count: u64) -> Result<(), MotifError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(CENSUS_HEADER)?;
    let mut write_row = |name: &str, row: &CensusRow| {
        w.write_record([
            name,
            &row.motif_count.to_string(),
            &row.device_count.to_string(),
            &row.flow_count.to_string(),
            &opt_f64(row.percentage),
            &opt_f64(row.avg_distance_km),
        ])
    };
    write_row("global", &census.global)?;
    for class in MotifClass::ALL {
        let row = census.row(class);
        if row.motif_count >= min_count {
            write_row(class.name(), row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a census file; classes absent from the file are zero.
pub fn read_census<R: Read>(stream: R) -> Result<MotifCensus, MotifError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
    let header = rdr.headers()?.clone();
    let mut pos = [0usize; 6];
    for (slot, col) in pos.iter_mut().zip(CENSUS_HEADER) {
        *slot = header.iter().position(|h| h == col).ok_or(MotifError::MissingColumn(col))?;
    }
    let mut census = MotifCensus::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let bad = |message: String| MotifError::Row { line, message };
        let get = |i: usize| rec.get(pos[i]).ok_or_else(|| bad("missing field".into()));
        let int = |i: usize| -> Result<u64, MotifError> {
            let raw = get(i)?;
            raw.parse().map_err(|_| bad(format!("`{raw}` is not a count")))
        };
        let float = |i: usize| -> Result<Option<f64>, MotifError> {
            let raw = get(i)?;
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse().map(Some).map_err(|_| bad(format!("`{raw}` is not a number")))
        };
        let row = CensusRow {
            motif_count: int(1)?,
            device_count: int(2)?,
            flow_count: int(3)?,
            percentage: float(4)?,
            avg_distance_km: float(5)?,
        };
        let name = get(0)?;
        if name == "global" {
            census.global = row;
        } else {
            *census.row_mut(name.parse()?) = row;
        }
    }
    Ok(census)
}

/// One line of `instances.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub class: MotifClass,
    pub nodes: Vec<String>,
    pub edges: Vec<(u8, u8)>,
    pub device_days: u64,
    pub weekday_days: u64,
    pub weekend_days: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_km: Option<f64>,
}

impl InstanceRecord {
    pub fn from_tally(t: &InstanceTally, avg_km: Option<f64>) -> Self {
        InstanceRecord {
            class: t.instance.class,
            nodes: t.instance.nodes.clone(),
            edges: t.instance.edges.clone(),
            device_days: t.device_days,
            weekday_days: t.weekday_days,
            weekend_days: t.weekend_days,
            avg_km,
        }
    }

    pub fn instance(&self) -> MotifInstance {
        MotifInstance { class: self.class, nodes: self.nodes.clone(), edges: self.edges.clone() }
    }
}

pub fn write_instances<W: Write>(mut stream: W, records: &[InstanceRecord]) -> Result<(), MotifError> {
    for r in records {
        serde_json::to_writer(&mut stream, r)?;
        stream.write_all(b"\n")?;
    }
    stream.flush()?;
    Ok(())
}

/// Reads `instances.jsonl`, re-checking each record's class against its
/// edges.
pub fn read_instances<R: BufRead>(stream: R) -> Result<Vec<InstanceRecord>, MotifError> {
    let mut out = Vec::new();
    for (i, line) in stream.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: InstanceRecord = serde_json::from_str(&line)?;
        let edges: Vec<(usize, usize)> = rec.edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
        let class = classify_graph(rec.nodes.len(), &edges)?;
        if class != rec.class {
            return Err(MotifError::Row {
                line: i as u64 + 1,
                message: format!("edges classify as {class}, record says {}", rec.class),
            });
        }
        out.push(rec);
    }
    Ok(out)
}
