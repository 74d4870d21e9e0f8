//! Size-matched reference networks: Erdős–Rényi `G(n, p)` for the Poisson
//! baseline and Barabási–Albert preferential attachment for the scale-free
//! baseline.
//!
//! All generators draw from `ChaCha8Rng` seeded with `seed_from_u64`, so a
//! given spec and seed always yields the same edge set.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netbuild::{GeneratorMeta, NetError, PlaceNetwork};

/// Identifier of the random source recorded in network sidecars.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.3, seed_from_u64)";

#[derive(Debug, Error)]
pub enum RefNetError {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(usize),
    #[error("target average degree {degree} must lie in (0, {max}]")]
    DegreeRange { degree: f64, max: usize },
    #[error("spec kind is {0}, expected {1}")]
    WrongKind(RefNetKind, RefNetKind),
    #[error("edges per node m = {m} must satisfy 1 <= m < n = {n}")]
    EdgesPerNode { m: usize, n: usize },
    #[error("{edges} edges do not fit in a simple graph on {n} nodes")]
    TooManyEdges { edges: usize, n: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefNetKind {
    Random,
    ScaleFree,
}

impl fmt::Display for RefNetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefNetKind::Random => "random",
            RefNetKind::ScaleFree => "scale-free",
        })
    }
}

impl FromStr for RefNetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(RefNetKind::Random),
            "scale-free" | "scale_free" => Ok(RefNetKind::ScaleFree),
            other => Err(format!("unknown reference kind `{other}` (expected random|scale-free)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefNetSpec {
    pub kind: RefNetKind,
    pub n: usize,
    pub target_average_degree: f64,
    pub seed: u64,
}

impl RefNetSpec {
    pub fn validate(&self) -> Result<(), RefNetError> {
        if self.n < 2 {
            return Err(RefNetError::TooFewNodes(self.n));
        }
        let d = self.target_average_degree;
        if !(d > 0.0 && d <= (self.n - 1) as f64) {
            return Err(RefNetError::DegreeRange { degree: d, max: self.n - 1 });
        }
        Ok(())
    }

    /// Edges added per arriving node in the scale-free model.
    pub fn edges_per_node(&self) -> usize {
        (self.target_average_degree / 2.0).round() as usize
    }

    pub fn generator_meta(&self) -> GeneratorMeta {
        let (model, m) = match self.kind {
            RefNetKind::Random => ("erdos-renyi G(n,p), p = d/(n-1)", None),
            RefNetKind::ScaleFree => ("barabasi-albert, seed clique K_m", Some(self.edges_per_node())),
        };
        GeneratorMeta {
            model: model.to_owned(),
            rng: RNG_ALGORITHM.to_owned(),
            seed: self.seed,
            n: self.n,
            target_average_degree: self.target_average_degree,
            edges_per_node: m,
        }
    }
}

/// Dispatches on `spec.kind`.
pub fn generate(spec: &RefNetSpec) -> Result<PlaceNetwork, RefNetError> {
    match spec.kind {
        RefNetKind::Random => gen_random_network(spec),
        RefNetKind::ScaleFree => gen_scale_free_network(spec),
    }
}

/// Erdős–Rényi `G(n, p)` with `p = d / (n − 1)`, unit weights.
///
/// Uses geometric skipping over the lower-triangular pair sequence
/// (Batagelj & Brandes), so the cost is linear in `n + edges`.
pub fn gen_random_network(spec: &RefNetSpec) -> Result<PlaceNetwork, RefNetError> {
    if spec.kind != RefNetKind::Random {
        return Err(RefNetError::WrongKind(spec.kind, RefNetKind::Random));
    }
    spec.validate()?;
    let n = spec.n;
    let p = (spec.target_average_degree / (n - 1) as f64).min(1.0);
    let mut edges = Vec::new();
    if p >= 1.0 {
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                edges.push((a, b, 1));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let log_q = (1.0 - p).ln();
        let (mut v, mut w): (usize, i64) = (1, -1);
        while v < n {
            let r: f64 = rng.gen();
            let skip = ((1.0 - r).ln() / log_q).floor();
            w += 1 + if skip.is_finite() { skip as i64 } else { i64::MAX / 4 };
            while w >= v as i64 && v < n {
                w -= v as i64;
                v += 1;
            }
            if v < n {
                edges.push((w as u32, v as u32, 1));
            }
        }
    }
    Ok(PlaceNetwork::from_index_edges(n, &edges)?)
}

/// Barabási–Albert preferential attachment with `m = round(d / 2)` edges per
/// arriving node. Nodes `0..m` start as a complete graph; each later node
/// links to `m` distinct existing nodes chosen with probability proportional
/// to degree. The edge count is exactly `m(m − 1)/2 + m(n − m)`.
pub fn gen_scale_free_network(spec: &RefNetSpec) -> Result<PlaceNetwork, RefNetError> {
    if spec.kind != RefNetKind::ScaleFree {
        return Err(RefNetError::WrongKind(spec.kind, RefNetKind::ScaleFree));
    }
    spec.validate()?;
    let n = spec.n;
    let m = spec.edges_per_node();
    if m < 1 || m >= n {
        return Err(RefNetError::EdgesPerNode { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut edges: Vec<(u32, u32, u64)> = Vec::with_capacity(m * (m - 1) / 2 + m * (n - m));
    // Every edge endpoint once: sampling uniformly from it is sampling by degree.
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * edges.capacity());
    for a in 0..m as u32 {
        for b in a + 1..m as u32 {
            edges.push((a, b, 1));
            endpoints.extend([a, b]);
        }
    }
    let mut chosen: Vec<u32> = Vec::with_capacity(m);
    for v in m as u32..n as u32 {
        chosen.clear();
        while chosen.len() < m {
            let t =
                if endpoints.is_empty() { rng.gen_range(0..v) } else { endpoints[rng.gen_range(0..endpoints.len())] };
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        for &t in &chosen {
            edges.push((t, v, 1));
            endpoints.extend([t, v]);
        }
    }
    Ok(PlaceNetwork::from_index_edges(n, &edges)?)
}

/// Uniform random simple graph with exactly `edges` unit-weight edges,
/// `G(n, M)`.
pub fn gen_uniform_edge_count(n: usize, edges: usize, seed: u64) -> Result<PlaceNetwork, RefNetError> {
    if n < 2 {
        return Err(RefNetError::TooFewNodes(n));
    }
    let max = n * (n - 1) / 2;
    if edges > max {
        return Err(RefNetError::TooManyEdges { edges, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(edges);
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if seen.insert(key) {
            out.push((key.0, key.1, 1));
        }
    }
    Ok(PlaceNetwork::from_index_edges(n, &out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{degree_distribution, fit_power_law};

    fn spec(kind: RefNetKind, n: usize, d: f64, seed: u64) -> RefNetSpec {
        RefNetSpec { kind, n, target_average_degree: d, seed }
    }

    fn edge_set(net: &PlaceNetwork) -> Vec<(u32, u32, u64)> {
        net.edges().collect()
    }

    #[test]
    fn forced_single_edge() {
        for seed in 0..5 {
            let g = gen_random_network(&spec(RefNetKind::Random, 2, 1.0, seed)).unwrap();
            assert_eq!(g.edge_count(), 1);
        }
    }

    #[test]
    fn random_is_deterministic() {
        let s = spec(RefNetKind::Random, 500, 6.0, 42);
        assert_eq!(edge_set(&gen_random_network(&s).unwrap()), edge_set(&gen_random_network(&s).unwrap()));
        let other = spec(RefNetKind::Random, 500, 6.0, 43);
        assert_ne!(edge_set(&gen_random_network(&s).unwrap()), edge_set(&gen_random_network(&other).unwrap()));
    }

    #[test]
    fn random_average_degree_near_target() {
        for seed in 0..10 {
            let g = gen_random_network(&spec(RefNetKind::Random, 5000, 17.187, seed)).unwrap();
            let avg = 2.0 * g.edge_count() as f64 / 5000.0;
            assert!((avg - 17.187).abs() < 0.05 * 17.187, "seed {seed}: {avg}");
        }
    }

    #[test]
    fn smallest_attachment_graph() {
        let g = gen_scale_free_network(&spec(RefNetKind::ScaleFree, 4, 3.0, 1)).unwrap();
        assert_eq!(g.edge_count(), 5);
        assert!(gen_scale_free_network(&spec(RefNetKind::ScaleFree, 4, 6.0, 1)).is_err());
    }

    #[test]
    fn scale_free_edge_count_is_exact() {
        for (n, d, seed) in [(50, 2.0, 1u64), (200, 6.0, 2), (1000, 16.0, 3), (30, 9.0, 4)] {
            let s = spec(RefNetKind::ScaleFree, n, d, seed);
            let m = s.edges_per_node();
            let g = gen_scale_free_network(&s).unwrap();
            assert_eq!(g.edge_count(), m * (m - 1) / 2 + m * (n - m));
        }
    }

    #[test]
    fn scale_free_large_run() {
        let g = gen_scale_free_network(&spec(RefNetKind::ScaleFree, 10_000, 16.0, 9)).unwrap();
        let avg = 2.0 * g.edge_count() as f64 / 10_000.0;
        assert!((avg - 16.0).abs() < 0.05 * 16.0);
        let fit = fit_power_law(&degree_distribution(&g).unwrap(), 8).unwrap();
        assert!((2.5..=3.5).contains(&fit.exponent), "{fit:?}");
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(gen_random_network(&spec(RefNetKind::Random, 1, 1.0, 0)), Err(RefNetError::TooFewNodes(1))));
        assert!(matches!(
            gen_random_network(&spec(RefNetKind::Random, 10, 10.0, 0)),
            Err(RefNetError::DegreeRange { .. })
        ));
        assert!(matches!(
            gen_scale_free_network(&spec(RefNetKind::ScaleFree, 10, 0.8, 0)),
            Err(RefNetError::EdgesPerNode { m: 0, .. })
        ));
        assert!(matches!(
            gen_scale_free_network(&spec(RefNetKind::Random, 10, 4.0, 0)),
            Err(RefNetError::WrongKind(..))
        ));
    }

    #[test]
    fn uniform_edge_count() {
        let g = gen_uniform_edge_count(100, 300, 5).unwrap();
        assert_eq!(g.edge_count(), 300);
        assert!(gen_uniform_edge_count(4, 7, 0).is_err());
        assert_eq!(gen_uniform_edge_count(4, 6, 0).unwrap().edge_count(), 6);
    }
}
