//! The undirected, integer-weighted network of places and its construction
//! from stay sequences.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{map_slice, Exec};
use crate::ingest::StaySequence;

pub const EDGES_HEADER: [&str; 3] = ["poi_a", "poi_b", "weight"];

#[derive(Debug, Error)]
pub enum NetError {
    #[error("sequence of device {device_id} on {date} has {len} stay(s); at least 2 are required")]
    ShortSequence { device_id: String, date: NaiveDate, len: usize },
    #[error("self-loop at `{0}`")]
    SelfLoop(String),
    #[error("edge {0}-{1} has weight 0")]
    ZeroWeight(String, String),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(String, String),
    #[error("cannot merge an empty list of networks")]
    EmptyMerge,
    #[error("node index {0} out of range")]
    IndexRange(u32),
    #[error("bad period label `{0}`")]
    Label(String),
    #[error("edge file is missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("sidecar does not match edge file: {0}")]
    Sidecar(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Inclusive range of local dates a network covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl Period {
    pub fn day(date: NaiveDate) -> Self {
        Period { first: date, last: date }
    }

    pub fn cover(self, other: Period) -> Period {
        Period { first: self.first.min(other.first), last: self.last.max(other.last) }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.first == self.last {
            write!(f, "{}", self.first)
        } else {
            write!(f, "{}/{}", self.first, self.last)
        }
    }
}

impl FromStr for Period {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NetError::Label(s.to_owned());
        let (a, b) = s.split_once('/').unwrap_or((s, s));
        let first: NaiveDate = a.parse().map_err(|_| bad())?;
        let last: NaiveDate = b.parse().map_err(|_| bad())?;
        if last < first {
            return Err(bad());
        }
        Ok(Period { first, last })
    }
}

/// How stay sequences become edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkMode {
    /// Each consecutive pair of stays adds 1 to that edge.
    #[default]
    Consecutive,
    /// Each unordered pair of distinct POIs in a sequence adds 1.
    Covisitation,
}

impl fmt::Display for NetworkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkMode::Consecutive => "consecutive",
            NetworkMode::Covisitation => "covisitation",
        })
    }
}

impl FromStr for NetworkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "consecutive" => Ok(NetworkMode::Consecutive),
            "covisitation" => Ok(NetworkMode::Covisitation),
            other => Err(format!("unknown network mode `{other}` (expected consecutive|covisitation)")),
        }
    }
}

/// Undirected simple graph of POIs with positive integer edge weights.
///
/// Nodes are stored in ascending id order and addressed by dense `u32`
/// indices, so index order and id order agree. Adjacency lists are sorted by
/// neighbor index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaceNetwork {
    label: Option<Period>,
    nodes: Vec<String>,
    index: HashMap<String, u32>,
    adjacency: Vec<Vec<(u32, u64)>>,
    edge_count: usize,
    total_weight: u64,
}

impl PlaceNetwork {
    /// Builds a network from weighted edges plus any extra (possibly
    /// isolated) nodes. Repeated edges have their weights summed.
    pub fn from_edges<S: AsRef<str>>(
        label: Option<Period>,
        extra_nodes: impl IntoIterator<Item = S>,
        edges: impl IntoIterator<Item = (S, S, u64)>,
    ) -> Result<Self, NetError> {
        let mut acc = EdgeAccumulator::default();
        for n in extra_nodes {
            acc.add_node(n.as_ref());
        }
        for (a, b, w) in edges {
            acc.add(a.as_ref(), b.as_ref(), w)?;
        }
        Ok(acc.finish(label))
    }

    /// Builds a network on `n` synthetic nodes named `v0…`, zero-padded so
    /// that id order equals index order.
    pub fn from_index_edges(n: usize, edges: &[(u32, u32, u64)]) -> Result<Self, NetError> {
        let width = n.saturating_sub(1).to_string().len();
        let nodes: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
        let mut adjacency = vec![Vec::new(); n];
        let mut total_weight = 0;
        for &(a, b, w) in edges {
            if a as usize >= n {
                return Err(NetError::IndexRange(a));
            }
            if b as usize >= n {
                return Err(NetError::IndexRange(b));
            }
            if a == b {
                return Err(NetError::SelfLoop(nodes[a as usize].clone()));
            }
            if w == 0 {
                return Err(NetError::ZeroWeight(nodes[a as usize].clone(), nodes[b as usize].clone()));
            }
            adjacency[a as usize].push((b, w));
            adjacency[b as usize].push((a, w));
            total_weight += w;
        }
        for (i, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(pair) = list.windows(2).find(|p| p[0].0 == p[1].0) {
                return Err(NetError::DuplicateEdge(nodes[i].clone(), nodes[pair[0].0 as usize].clone()));
            }
        }
        let index = nodes.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        Ok(PlaceNetwork { label: None, nodes, index, adjacency, edge_count: edges.len(), total_weight })
    }

    pub fn label(&self) -> Option<Period> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Period>) -> Self {
        self.label = label;
        self
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in ascending order; position is the node index.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_id(&self, idx: u32) -> &str {
        &self.nodes[idx as usize]
    }

    pub fn node_index(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    /// `(neighbor, weight)` pairs sorted by neighbor index.
    pub fn neighbors(&self, idx: u32) -> &[(u32, u64)] {
        &self.adjacency[idx as usize]
    }

    pub fn degree_of(&self, idx: u32) -> usize {
        self.adjacency[idx as usize].len()
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<u64> {
        let list = &self.adjacency[a as usize];
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.weight(a, b).is_some()
    }

    /// Edges as `(a, b, weight)` with `a < b`, in ascending `(a, b)` order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, list)| {
            let a = a as u32;
            list.iter().filter(move |&&(b, _)| b > a).map(move |&(b, w)| (a, b, w))
        })
    }

    /// Nodes without incident edges.
    pub fn isolated_nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().zip(&self.adjacency).filter(|(_, adj)| adj.is_empty()).map(|(n, _)| n.as_str())
    }
}

/// Sums weights of unordered POI pairs.
#[derive(Default)]
struct EdgeAccumulator {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
}

impl EdgeAccumulator {
    fn add_node(&mut self, id: &str) {
        if !self.nodes.contains(id) {
            self.nodes.insert(id.to_owned());
        }
    }

    fn add(&mut self, a: &str, b: &str, w: u64) -> Result<(), NetError> {
        if a == b {
            return Err(NetError::SelfLoop(a.to_owned()));
        }
        if w == 0 {
            return Err(NetError::ZeroWeight(a.to_owned(), b.to_owned()));
        }
        let key = if a < b { (a.to_owned(), b.to_owned()) } else { (b.to_owned(), a.to_owned()) };
        *self.edges.entry(key).or_insert(0) += w;
        Ok(())
    }

    fn finish(self, label: Option<Period>) -> PlaceNetwork {
        let mut nodes = self.nodes;
        for (a, b) in self.edges.keys() {
            if !nodes.contains(a) {
                nodes.insert(a.clone());
            }
            if !nodes.contains(b) {
                nodes.insert(b.clone());
            }
        }
        let nodes: Vec<String> = nodes.into_iter().collect();
        let index: HashMap<String, u32> = nodes.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut total_weight = 0;
        for ((a, b), w) in &self.edges {
            let (ia, ib) = (index[a], index[b]);
            adjacency[ia as usize].push((ib, *w));
            adjacency[ib as usize].push((ia, *w));
            total_weight += w;
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        PlaceNetwork { label, nodes, index, adjacency, edge_count: self.edges.len(), total_weight }
    }
}

fn covering_period(sequences: &[StaySequence]) -> Option<Period> {
    sequences.iter().map(|s| Period::day(s.local_date)).reduce(Period::cover)
}

/// Folds stay sequences into a network labelled with the dates they cover.
pub fn build_network(sequences: &[StaySequence], mode: NetworkMode) -> Result<PlaceNetwork, NetError> {
    let mut acc = EdgeAccumulator::default();
    for seq in sequences {
        if seq.stays.len() < 2 {
            return Err(NetError::ShortSequence {
                device_id: seq.device_id.clone(),
                date: seq.local_date,
                len: seq.stays.len(),
            });
        }
        for poi in &seq.stays {
            acc.add_node(poi);
        }
        match mode {
            NetworkMode::Consecutive => {
                for pair in seq.stays.windows(2) {
                    acc.add(&pair[0], &pair[1], 1)?;
                }
            }
            NetworkMode::Covisitation => {
                let distinct: BTreeSet<&str> = seq.stays.iter().map(String::as_str).collect();
                let distinct: Vec<&str> = distinct.into_iter().collect();
                for (i, a) in distinct.iter().enumerate() {
                    for b in &distinct[i + 1..] {
                        acc.add(a, b, 1)?;
                    }
                }
            }
        }
    }
    Ok(acc.finish(covering_period(sequences)))
}

/// One network per local date, built independently.
pub fn build_daily_networks(
    sequences: &[StaySequence],
    mode: NetworkMode,
    exec: Exec,
) -> Result<BTreeMap<NaiveDate, PlaceNetwork>, NetError> {
    let mut by_day: BTreeMap<NaiveDate, Vec<StaySequence>> = BTreeMap::new();
    for seq in sequences {
        by_day.entry(seq.local_date).or_default().push(seq.clone());
    }
    let days: Vec<(NaiveDate, Vec<StaySequence>)> = by_day.into_iter().collect();
    let built = map_slice(&days, exec, |(date, seqs)| build_network(seqs, mode).map(|n| (*date, n)));
    built.into_iter().collect()
}

/// Union of nodes with summed edge weights; the label covers every input
/// label.
pub fn merge_networks(nets: &[PlaceNetwork]) -> Result<PlaceNetwork, NetError> {
    if nets.is_empty() {
        return Err(NetError::EmptyMerge);
    }
    let mut acc = EdgeAccumulator::default();
    for net in nets {
        for id in net.nodes() {
            acc.add_node(id);
        }
        for (a, b, w) in net.edges() {
            acc.add(net.node_id(a), net.node_id(b), w)?;
        }
    }
    let label = nets.iter().filter_map(PlaceNetwork::label).reduce(Period::cover);
    Ok(acc.finish(label))
}

/// Metadata stored next to an edge file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkMeta {
    pub label: Option<String>,
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    /// `consecutive`, `covisitation`, or the reference-network kind.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorMeta>,
    #[serde(default)]
    pub isolated_nodes: Vec<String>,
}

/// Provenance of a generated network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorMeta {
    pub model: String,
    pub rng: String,
    pub seed: u64,
    pub n: usize,
    pub target_average_degree: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges_per_node: Option<usize>,
}

impl NetworkMeta {
    pub fn describe(net: &PlaceNetwork, mode: impl Into<String>) -> Self {
        NetworkMeta {
            label: net.label().map(|p| p.to_string()),
            nodes: net.node_count(),
            edges: net.edge_count(),
            total_weight: net.total_weight(),
            mode: mode.into(),
            generator: None,
            isolated_nodes: net.isolated_nodes().map(str::to_owned).collect(),
        }
    }
}

/// `dir/network.csv` → `dir/network.meta.json`.
pub fn sidecar_path(edges_path: &Path) -> PathBuf {
    edges_path.with_extension("meta.json")
}

/// Writes the edge list, one row per unordered edge with `poi_a < poi_b`.
pub fn write_edges<W: Write>(stream: W, net: &PlaceNetwork) -> Result<(), NetError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(EDGES_HEADER)?;
    for (a, b, weight) in net.edges() {
        w.write_record([net.node_id(a), net.node_id(b), &weight.to_string()])?;
    }
    w.flush().map_err(|source| NetError::Io { path: PathBuf::new(), source })?;
    Ok(())
}

/// Reads an edge list. Duplicate edges and malformed rows are errors.
pub fn read_edges<R: Read>(stream: R, label: Option<Period>, isolated: &[String]) -> Result<PlaceNetwork, NetError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
    let header = rdr.headers()?.clone();
    let mut pos = [0usize; 3];
    for (slot, col) in pos.iter_mut().zip(EDGES_HEADER) {
        *slot = header.iter().position(|h| h == col).ok_or(NetError::MissingColumn(col))?;
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let get = |i: usize| rec.get(pos[i]).ok_or_else(|| NetError::Row { line, message: "missing field".into() });
        let (a, b) = (get(0)?.to_owned(), get(1)?.to_owned());
        let raw = get(2)?;
        let w: u64 = raw
            .parse()
            .map_err(|_| NetError::Row { line, message: format!("weight `{raw}` is not a positive integer") })?;
        let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
        if !seen.insert(key) {
            return Err(NetError::DuplicateEdge(a, b));
        }
        edges.push((a, b, w));
    }
    PlaceNetwork::from_edges(label, isolated.iter().cloned(), edges)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> NetError + '_ {
    move |source| NetError::Io { path: path.to_owned(), source }
}

/// Writes `path` and its JSON sidecar.
pub fn save_network(path: &Path, net: &PlaceNetwork, meta: &NetworkMeta) -> Result<(), NetError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_edges(BufWriter::new(file), net)?;
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(meta)?;
    text.push('\n');
    std::fs::write(&side, text).map_err(io_err(&side))?;
    Ok(())
}

/// Reads `path`, using its sidecar when present for the label and isolated
/// nodes, and checking the sidecar's counts against the edges.
pub fn load_network(path: &Path) -> Result<(PlaceNetwork, Option<NetworkMeta>), NetError> {
    let side = sidecar_path(path);
    let meta: Option<NetworkMeta> = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(io_err(&side))?;
        Some(serde_json::from_str(&text)?)
    } else {
        None
    };
    let label = match meta.as_ref().and_then(|m| m.label.as_deref()) {
        Some(l) => Some(l.parse()?),
        None => None,
    };
    let isolated = meta.as_ref().map(|m| m.isolated_nodes.clone()).unwrap_or_default();
    let file = File::open(path).map_err(io_err(path))?;
    let net = read_edges(BufReader::new(file), label, &isolated)?;
    if let Some(m) = &meta {
        if m.nodes != net.node_count() || m.edges != net.edge_count() || m.total_weight != net.total_weight() {
            return Err(NetError::Sidecar(format!(
                "sidecar says {} nodes / {} edges / weight {}, file has {} / {} / {}",
                m.nodes,
                m.edges,
                m.total_weight,
                net.node_count(),
                net.edge_count(),
                net.total_weight()
            )));
        }
    }
    Ok((net, meta))
}
