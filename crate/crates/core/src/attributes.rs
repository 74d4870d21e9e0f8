//! NAICS sector categories, visit-frequency rankings by category, and
//! attributed motifs identified up to label-preserving automorphism.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PoiCatalog;
use crate::motifs::{classify_graph, MotifClass, MotifError, MotifInstance};

#[derive(Debug, Error)]
pub enum AttrError {
    #[error("naics `{0}` does not start with a known 2-digit sector prefix")]
    UnknownPrefix(String),
    #[error("poi `{0}` is not in the catalog")]
    MissingPoi(String),
    #[error("instance is labelled {stated} but its edges form {actual}")]
    ClassMismatch { stated: MotifClass, actual: MotifClass },
    #[error("{labels} labels for a motif of {nodes} nodes")]
    LabelCount { labels: usize, nodes: usize },
    #[error("no attributed instances to rank")]
    Empty,
    #[error("unknown sector `{0}`")]
    UnknownSector(String),
    #[error(transparent)]
    Motif(#[from] MotifError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A 2-digit NAICS business-activity category.
#[derive(Debug, PartialEq, Eq)]
pub struct SectorCategory {
    pub id: u8,
    /// Prefixes joined by `-`, e.g. `44-45`.
    pub code: &'static str,
    pub prefixes: &'static [&'static str],
    pub label: &'static str,
}

macro_rules! sector {
    ($id:expr, $code:expr, [$($p:expr),+], $label:expr) => {
        SectorCategory { id: $id, code: $code, prefixes: &[$($p),+], label: $label }
    };
}

/// The twenty sectors, in id order.
pub static SECTORS: [SectorCategory; 20] = [
    sector!(1, "11", ["11"], "Agriculture, Forestry, Fishing and Hunting"),
    sector!(2, "21", ["21"], "Mining"),
    sector!(3, "22", ["22"], "Utilities"),
    sector!(4, "23", ["23"], "Construction"),
    sector!(5, "31-33", ["31", "32", "33"], "Manufacturing"),
    sector!(6, "42", ["42"], "Wholesale Trade"),
    sector!(7, "44-45", ["44", "45"], "Retail Trade"),
    sector!(8, "48-49", ["48", "49"], "Transportation and Warehousing"),
    sector!(9, "51", ["51"], "Information"),
    sector!(10, "52", ["52"], "Finance and Insurance"),
    sector!(11, "53", ["53"], "Real Estate Rental and Leasing"),
    sector!(12, "54", ["54"], "Professional, Scientific, and Technical Services"),
    sector!(13, "55", ["55"], "Management of Companies and Enterprises"),
    sector!(14, "56", ["56"], "Administrative and Support and Waste Management and Remediation Services"),
    sector!(15, "61", ["61"], "Educational Services"),
    sector!(16, "62", ["62"], "Health Care and Social Assistance"),
    sector!(17, "71", ["71"], "Arts, Entertainment, and Recreation"),
    sector!(18, "72", ["72"], "Accommodation and Food Services"),
    sector!(19, "81", ["81"], "Other Services (except Public Administration)"),
    sector!(20, "92", ["92"], "Public Administration"),
];

/// Sector owning the first two digits of `naics`.
pub fn to_sector(naics: &str) -> Result<&'static SectorCategory, AttrError> {
    let unknown = || AttrError::UnknownPrefix(naics.to_owned());
    if naics.len() < 2 || !naics.bytes().all(|b| b.is_ascii_digit()) {
        return Err(unknown());
    }
    let prefix = &naics[..2];
    SECTORS.iter().find(|s| s.prefixes.contains(&prefix)).ok_or_else(unknown)
}

/// Looks a sector up by its code (`44-45`), any member prefix (`45`), or id.
pub fn sector_by_code(code: &str) -> Result<&'static SectorCategory, AttrError> {
    let code = code.trim();
    SECTORS
        .iter()
        .find(|s| s.code == code || s.prefixes.contains(&code) || s.id.to_string() == code)
        .ok_or_else(|| AttrError::UnknownSector(code.to_owned()))
}

/// Category granularity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Digits {
    Two,
    Four,
}

impl Digits {
    pub fn count(self) -> usize {
        match self {
            Digits::Two => 2,
            Digits::Four => 4,
        }
    }
}

/// Category code of a NAICS string: the sector code for two digits, the
/// leading four digits (or the whole code if shorter) for four.
pub fn category_code(naics: &str, digits: Digits) -> Result<String, AttrError> {
    let sector = to_sector(naics)?;
    Ok(match digits {
        Digits::Two => sector.code.to_owned(),
        Digits::Four => naics[..naics.len().min(4)].to_owned(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryShare {
    pub code: String,
    pub label: String,
    pub count: u64,
    pub share: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CategoryFrequency {
    /// Ordered by count descending, then code.
    pub ranked: Vec<CategoryShare>,
    /// Endpoints whose POI or NAICS prefix could not be resolved.
    pub unresolved: u64,
}

/// Ranks categories by visit-flow endpoints. A flow `(a, b, w)` adds `w` to
/// the categories of both `a` and `b`. Four-digit labels come from `names`
/// when given, else the code itself.
pub fn category_frequency<'a>(
    flows: impl IntoIterator<Item = (&'a str, &'a str, u64)>,
    catalog: &PoiCatalog,
    digits: Digits,
    names: Option<&BTreeMap<String, String>>,
) -> CategoryFrequency {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut unresolved = 0;
    for (a, b, w) in flows {
        for poi in [a, b] {
            let code = catalog.get(poi).ok_or(()).and_then(|p| category_code(&p.naics, digits).map_err(|_| ()));
            match code {
                Ok(code) => *counts.entry(code).or_insert(0) += w,
                Err(()) => unresolved += w,
            }
        }
    }
    let total: u64 = counts.values().sum();
    let label_of = |code: &str| match digits {
        Digits::Two => sector_by_code(code).map(|s| s.label.to_owned()).unwrap_or_else(|_| code.to_owned()),
        Digits::Four => names.and_then(|n| n.get(code).cloned()).unwrap_or_else(|| code.to_owned()),
    };
    let mut ranked: Vec<CategoryShare> = counts
        .into_iter()
        .map(|(code, count)| CategoryShare { label: label_of(&code), share: count as f64 / total as f64, code, count })
        .collect();
    ranked.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.code.cmp(&b.code)));
    CategoryFrequency { ranked, unresolved }
}

/// Reads an optional `code,title` lookup for 4-digit category names.
pub fn load_naics_names<R: Read>(stream: R) -> Result<BTreeMap<String, String>, AttrError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if let (Some(code), Some(title)) = (rec.get(0), rec.get(1)) {
            out.insert(code.to_owned(), title.to_owned());
        }
    }
    Ok(out)
}

pub fn write_category_frequency<W: Write>(stream: W, freq: &CategoryFrequency) -> Result<(), AttrError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(["rank", "code", "label", "count", "share"])?;
    for (i, c) in freq.ranked.iter().enumerate() {
        w.write_record([
            &(i + 1).to_string(),
            c.code.as_str(),
            c.label.as_str(),
            &c.count.to_string(),
            &c.share.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Motif class plus node labels in the class's canonical position order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AttributedMotifKey {
    pub class: MotifClass,
    pub labels: Vec<String>,
}

impl AttributedMotifKey {
    /// All nodes carry the same category.
    pub fn is_same_category(&self) -> bool {
        self.labels.windows(2).all(|w| w[0] == w[1])
    }

    pub fn labels_joined(&self) -> String {
        self.labels.join("|")
    }
}

impl fmt::Display for AttributedMotifKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.class, self.labels_joined())
    }
}

/// Walks a connected graph of max degree 2 from `start`, returning the
/// visiting order.
fn walk(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    while let Some(&next) = adj[cur].iter().find(|&&v| v != prev && !order.contains(&v)) {
        order.push(next);
        prev = cur;
        cur = next;
    }
    order
}

/// Canonical label sequence for a labelled motif.
///
/// Position conventions, with symmetric positions sorted:
/// M2-1 and M3-2 and M4-1 sort all labels; M3-1 is (end, center, end);
/// M4-2 is (degree-3 pair, degree-2 pair); M4-3 is the minimal rotation or
/// reflection of the ring; M4-4 is (tail, hub, triangle pair); M4-5 is the
/// smaller of the path and its reverse; M4-6 is (hub, leaves).
pub fn canonical_labels<L: Ord + Clone>(
    n: usize,
    edges: &[(usize, usize)],
    labels: &[L],
) -> Result<(MotifClass, Vec<L>), AttrError> {
    if labels.len() != n {
        return Err(AttrError::LabelCount { labels: labels.len(), nodes: n });
    }
    let class = classify_graph(n, edges)?;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let deg = |v: usize| adj[v].len();
    let with_degree = |d: usize| -> Vec<L> {
        let mut v: Vec<L> = (0..n).filter(|&v| deg(v) == d).map(|v| labels[v].clone()).collect();
        v.sort();
        v
    };
    let sorted_all = || {
        let mut v = labels.to_vec();
        v.sort();
        v
    };
    let out = match class {
        MotifClass::M2_1 | MotifClass::M3_2 | MotifClass::M4_1 => sorted_all(),
        MotifClass::M3_1 => {
            let ends = with_degree(1);
            vec![ends[0].clone(), with_degree(2)[0].clone(), ends[1].clone()]
        }
        MotifClass::M4_2 => [with_degree(3), with_degree(2)].concat(),
        MotifClass::M4_3 => {
            let ring: Vec<L> = walk(&adj, 0).into_iter().map(|v| labels[v].clone()).collect();
            let mut best: Option<Vec<L>> = None;
            for shift in 0..4 {
                for reflect in [false, true] {
                    let seq: Vec<L> = (0..4)
                        .map(|i| {
                            let j = if reflect { (shift + 4 - i) % 4 } else { (shift + i) % 4 };
                            ring[j].clone()
                        })
                        .collect();
                    if best.as_ref().is_none_or(|b| seq < *b) {
                        best = Some(seq);
                    }
                }
            }
            best.expect("four candidates")
        }
        MotifClass::M4_4 => [with_degree(1), with_degree(3), with_degree(2)].concat(),
        MotifClass::M4_5 => {
            let start = (0..n).find(|&v| deg(v) == 1).expect("path has an end");
            let path: Vec<L> = walk(&adj, start).into_iter().map(|v| labels[v].clone()).collect();
            let rev: Vec<L> = path.iter().rev().cloned().collect();
            path.min(rev)
        }
        MotifClass::M4_6 => [with_degree(3), with_degree(1)].concat(),
        MotifClass::Other => sorted_all(),
    };
    Ok((class, out))
}

/// Attributed key of an instance, labelling each node with its category at
/// the given granularity.
pub fn canonical_key(
    instance: &MotifInstance,
    catalog: &PoiCatalog,
    digits: Digits,
) -> Result<AttributedMotifKey, AttrError> {
    let labels = instance
        .nodes
        .iter()
        .map(|id| {
            let poi = catalog.get(id).ok_or_else(|| AttrError::MissingPoi(id.clone()))?;
            category_code(&poi.naics, digits)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let edges: Vec<(usize, usize)> = instance.edges.iter().map(|&(a, b)| (a as usize, b as usize)).collect();
    let (class, labels) = canonical_labels(instance.nodes.len(), &edges, &labels)?;
    if class != instance.class {
        return Err(AttrError::ClassMismatch { stated: instance.class, actual: class });
    }
    Ok(AttributedMotifKey { class, labels })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributedShare {
    pub key: AttributedMotifKey,
    pub count: u64,
    /// Share of the class's total count.
    pub share: f64,
    pub same_category: bool,
}

/// Attributed motifs ranked within each class.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AttributedCensus {
    pub classes: BTreeMap<MotifClass, Vec<AttributedShare>>,
}

impl AttributedCensus {
    /// Keeps the first `k` entries of every class.
    pub fn top_k(&self, k: usize) -> AttributedCensus {
        AttributedCensus {
            classes: self.classes.iter().map(|(c, v)| (*c, v.iter().take(k).cloned().collect())).collect(),
        }
    }
}

/// Sums counts per key and ranks keys within each class by share
/// descending, then key ascending.
pub fn attributed_census(
    items: impl IntoIterator<Item = (AttributedMotifKey, u64)>,
) -> Result<AttributedCensus, AttrError> {
    let mut totals: BTreeMap<AttributedMotifKey, u64> = BTreeMap::new();
    for (key, n) in items {
        *totals.entry(key).or_insert(0) += n;
    }
    if totals.is_empty() {
        return Err(AttrError::Empty);
    }
    let mut per_class: BTreeMap<MotifClass, Vec<(AttributedMotifKey, u64)>> = BTreeMap::new();
    for (key, n) in totals {
        per_class.entry(key.class).or_default().push((key, n));
    }
    let mut census = AttributedCensus::default();
    for (class, mut entries) in per_class {
        let class_total: u64 = entries.iter().map(|(_, n)| n).sum();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let shares = entries
            .into_iter()
            .map(|(key, count)| AttributedShare {
                same_category: key.is_same_category(),
                share: if class_total == 0 { 0.0 } else { count as f64 / class_total as f64 },
                key,
                count,
            })
            .collect();
        census.classes.insert(class, shares);
    }
    Ok(census)
}

pub fn write_attributed_census<W: Write>(stream: W, census: &AttributedCensus) -> Result<(), AttrError> {
    let mut w = csv::Writer::from_writer(stream);
    w.write_record(["class", "labels", "share", "same_category"])?;
    for (class, entries) in &census.classes {
        for e in entries {
            w.write_record([
                class.name(),
                &e.key.labels_joined(),
                &e.share.to_string(),
                if e.same_category { "true" } else { "false" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
