//! Degree distributions, weighted clustering, network summaries and
//! degree-distribution fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::exec::{map_range, Exec};
use crate::netbuild::PlaceNetwork;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("histogram needs at least two distinct degrees >= {xmin}")]
    DegenerateHistogram { xmin: usize },
    #[error("xmin must be at least 1")]
    InvalidXmin,
    #[error("poisson rate must be positive, got {0}")]
    NonPositiveRate(f64),
}

/// Number of distinct neighbors of `node`; weights are ignored.
pub fn degree(net: &PlaceNetwork, node: &str) -> Result<usize, MetricsError> {
    let idx = net.node_index(node).ok_or_else(|| MetricsError::UnknownNode(node.to_owned()))?;
    Ok(net.degree_of(idx))
}

/// Count of nodes per degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<usize, usize>,
    pub n: usize,
}

/// One line of `degree_hist.csv`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegreeRow {
    pub k: usize,
    pub count: usize,
    pub pdf: f64,
    pub ccdf: f64,
}

impl DegreeHistogram {
    pub fn from_degrees(degrees: impl IntoIterator<Item = usize>) -> Self {
        let mut hist = DegreeHistogram::default();
        for k in degrees {
            *hist.counts.entry(k).or_insert(0) += 1;
            hist.n += 1;
        }
        hist
    }

    pub fn pdf(&self, k: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.counts.get(&k).copied().unwrap_or(0) as f64 / self.n as f64
    }

    /// P(K >= k).
    pub fn ccdf(&self, k: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let above: usize = self.counts.range(k..).map(|(_, c)| c).sum();
        above as f64 / self.n as f64
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let total: usize = self.counts.iter().map(|(k, c)| k * c).sum();
        total as f64 / self.n as f64
    }

    /// One row per observed degree, ascending. The CCDF is computed from
    /// integer suffix sums so it is exactly non-increasing.
    pub fn rows(&self) -> Vec<DegreeRow> {
        let n = self.n as f64;
        let mut above = self.n;
        self.counts
            .iter()
            .map(|(&k, &count)| {
                let row = DegreeRow { k, count, pdf: count as f64 / n, ccdf: above as f64 / n };
                above -= count;
                row
            })
            .collect()
    }
}

pub fn degree_distribution(net: &PlaceNetwork) -> Result<DegreeHistogram, MetricsError> {
    if net.is_empty() {
        return Err(MetricsError::EmptyNetwork);
    }
    Ok(DegreeHistogram::from_degrees((0..net.node_count() as u32).map(|i| net.degree_of(i))))
}

/// Barrat weighted clustering of the node at `idx`:
///
/// `C(i) = 1 / (s_i (k_i - 1)) * sum_{j,h} (w_ij + w_ih) / 2 * a_ij a_ih a_jh`
///
/// over ordered neighbor pairs, with `s_i` the node strength. Nodes of
/// degree below 2 get 0.
pub fn clustering_at(net: &PlaceNetwork, idx: u32) -> f64 {
    let own = net.neighbors(idx);
    let k = own.len();
    if k < 2 {
        return 0.0;
    }
    let strength: u128 = own.iter().map(|&(_, w)| u128::from(w)).sum();
    // Twice the Barrat numerator, kept integral.
    let mut doubled: u128 = 0;
    for &(j, w_ij) in own {
        let theirs = net.neighbors(j);
        let (mut a, mut b) = (0, 0);
        while a < own.len() && b < theirs.len() {
            let (h, w_ih) = own[a];
            let (h2, _) = theirs[b];
            match h.cmp(&h2) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    doubled += u128::from(w_ij) + u128::from(w_ih);
                    a += 1;
                    b += 1;
                }
            }
        }
    }
    doubled as f64 / (2.0 * strength as f64 * (k - 1) as f64)
}

pub fn local_clustering_weighted(net: &PlaceNetwork, node: &str) -> Result<f64, MetricsError> {
    let idx = net.node_index(node).ok_or_else(|| MetricsError::UnknownNode(node.to_owned()))?;
    Ok(clustering_at(net, idx))
}

/// Mean local clustering over every node, summed in ascending node order.
pub fn average_clustering(net: &PlaceNetwork, exec: Exec) -> Result<f64, MetricsError> {
    if net.is_empty() {
        return Err(MetricsError::EmptyNetwork);
    }
    let local = map_range(net.node_count(), exec, |i| clustering_at(net, i as u32));
    Ok(local.iter().sum::<f64>() / net.node_count() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub nodes: usize,
    pub edges: usize,
    pub total_weight: u64,
    pub average_degree: f64,
    pub average_clustering: f64,
}

pub fn network_summary(net: &PlaceNetwork, exec: Exec) -> Result<NetworkSummary, MetricsError> {
    let average_clustering = average_clustering(net, exec)?;
    Ok(NetworkSummary {
        nodes: net.node_count(),
        edges: net.edge_count(),
        total_weight: net.total_weight(),
        average_degree: 2.0 * net.edge_count() as f64 / net.node_count() as f64,
        average_clustering,
    })
}

/// Discrete power law `P(k) ∝ k^-exponent` for `k >= xmin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub xmin: usize,
    /// Max absolute gap between empirical and fitted CCDF over the tail.
    pub ks_distance: f64,
    /// Nodes with degree >= xmin.
    pub tail_size: usize,
}

const DIRECT_TERMS: usize = 64;

/// Returns `(ζ(s, q), Σ_{k≥q} ln k · k^-s)`, both multiplied by `q^s` so
/// they stay representable for large `s`. Direct summation of the first
/// terms, Euler–Maclaurin for the remainder.
fn scaled_zeta_pair(s: f64, q: usize) -> (f64, f64) {
    let qf = q as f64;
    let mut zeta = 0.0;
    let mut log_sum = 0.0;
    for k in q..q + DIRECT_TERMS {
        let kf = k as f64;
        let t = (kf / qf).powf(-s);
        zeta += t;
        log_sum += kf.ln() * t;
    }
    let n = (q + DIRECT_TERMS) as f64;
    let r = (n / qf).powf(-s);
    let ln_n = n.ln();
    let sm1 = s - 1.0;

    // Σ_{k≥N} f(k) ≈ ∫_N^∞ f + f(N)/2 − f'(N)/12 + f'''(N)/720
    let f_int = n * r / sm1;
    let f0 = r;
    let f1 = -s * r / n;
    let f3 = -s * (s + 1.0) * (s + 2.0) * r / (n * n * n);
    zeta += f_int + f0 / 2.0 - f1 / 12.0 + f3 / 720.0;

    let g_int = n * r * (ln_n / sm1 + 1.0 / (sm1 * sm1));
    let g0 = ln_n * r;
    let g1 = r * (1.0 - s * ln_n) / n;
    let g3 = r * ((s + 2.0) * (2.0 * s + 1.0) + s * (s + 1.0) - s * (s + 1.0) * (s + 2.0) * ln_n) / (n * n * n);
    log_sum += g_int + g0 / 2.0 - g1 / 12.0 + g3 / 720.0;
    (zeta, log_sum)
}

/// Hurwitz zeta `ζ(s, q) = Σ_{k≥q} k^-s` for `s > 1`, `q >= 1`.
pub fn hurwitz_zeta(s: f64, q: usize) -> f64 {
    scaled_zeta_pair(s, q).0 * (q as f64).powf(-s)
}

/// Model mean of `ln k` under the power law; strictly decreasing in `s`.
fn model_mean_log(s: f64, xmin: usize) -> f64 {
    let (z, l) = scaled_zeta_pair(s, xmin);
    l / z
}

/// Discrete maximum-likelihood power-law fit over degrees `>= xmin`.
///
/// The likelihood equation `E_α[ln k] = mean(ln k)` is solved by bisection.
pub fn fit_power_law(hist: &DegreeHistogram, xmin: usize) -> Result<PowerLawFit, MetricsError> {
    if xmin == 0 {
        return Err(MetricsError::InvalidXmin);
    }
    let tail: Vec<(usize, usize)> = hist.counts.range(xmin..).map(|(&k, &c)| (k, c)).collect();
    if tail.len() < 2 {
        return Err(MetricsError::DegenerateHistogram { xmin });
    }
    let tail_size: usize = tail.iter().map(|(_, c)| c).sum();
    let mean_log = tail.iter().map(|&(k, c)| c as f64 * (k as f64).ln()).sum::<f64>() / tail_size as f64;

    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while model_mean_log(hi, xmin) > mean_log {
        lo = hi;
        hi *= 2.0;
        if hi > 1e4 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model_mean_log(mid, xmin) > mean_log {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let exponent = 0.5 * (lo + hi);
    let ks_distance = ks_distance(&tail, tail_size, exponent, xmin);
    Ok(PowerLawFit { exponent, xmin, ks_distance, tail_size })
}

fn ks_distance(tail: &[(usize, usize)], tail_size: usize, exponent: f64, xmin: usize) -> f64 {
    let (z, _) = scaled_zeta_pair(exponent, xmin);
    let qf = xmin as f64;
    let kmax = tail.last().map(|&(k, _)| k).unwrap_or(xmin);
    let mut model_ccdf: f64 = 1.0;
    let mut emp_above = tail_size;
    let mut next = tail.iter().peekable();
    let mut worst: f64 = 0.0;
    for k in xmin..=kmax + 1 {
        let emp = emp_above as f64 / tail_size as f64;
        worst = worst.max((emp - model_ccdf.max(0.0)).abs());
        if let Some(&&(kk, c)) = next.peek() {
            if kk == k {
                emp_above -= c;
                next.next();
            }
        }
        model_ccdf -= (k as f64 / qf).powf(-exponent) / z;
    }
    worst.clamp(0.0, 1.0)
}

/// Tries every observed degree as `xmin` (tail of at least `min_tail`
/// nodes) and keeps the fit with the smallest KS distance; ties go to the
/// smaller `xmin`.
pub fn fit_power_law_scan(hist: &DegreeHistogram, min_tail: usize) -> Result<PowerLawFit, MetricsError> {
    let mut best: Option<PowerLawFit> = None;
    for &xmin in hist.counts.keys().filter(|&&k| k >= 1) {
        let Ok(fit) = fit_power_law(hist, xmin) else { continue };
        if fit.tail_size < min_tail.max(1) {
            continue;
        }
        if best.as_ref().is_none_or(|b| fit.ks_distance < b.ks_distance) {
            best = Some(fit);
        }
    }
    best.ok_or(MetricsError::DegenerateHistogram { xmin: 1 })
}

/// Poisson pmf with rate `rate`, evaluated at each `k` of `support`.
pub fn poisson_reference(rate: f64, support: &[usize]) -> Result<Vec<(usize, f64)>, MetricsError> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(MetricsError::NonPositiveRate(rate));
    }
    Ok(support.iter().map(|&k| (k, poisson_pmf(rate, k))).collect())
}

pub fn poisson_pmf(rate: f64, k: usize) -> f64 {
    let kf = k as f64;
    (kf * rate.ln() - rate - ln_gamma(kf + 1.0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net(n: usize, edges: &[(u32, u32, u64)]) -> PlaceNetwork {
        PlaceNetwork::from_index_edges(n, edges).unwrap()
    }

    fn triangle(w: u64) -> PlaceNetwork {
        net(3, &[(0, 1, w), (1, 2, w), (0, 2, w)])
    }

    fn star(leaves: u32) -> PlaceNetwork {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l, 1)).collect();
        net(leaves as usize + 1, &edges)
    }

    #[test]
    fn degrees() {
        assert_eq!(degree(&star(3), "v0").unwrap(), 3);
        let iso = net(2, &[]);
        assert_eq!(degree(&iso, "v0").unwrap(), 0);
        assert_eq!(degree(&triangle(1), "v1").unwrap(), 2);
        assert_eq!(degree(&iso, "nope"), Err(MetricsError::UnknownNode("nope".into())));
    }

    #[test]
    fn triangle_distribution() {
        let h = degree_distribution(&triangle(1)).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(2, 3)]));
        assert_eq!(h.pdf(2), 1.0);
        assert_eq!(h.ccdf(2), 1.0);
        assert_eq!(h.ccdf(3), 0.0);
        assert_eq!(h.ccdf(0), 1.0);
    }

    #[test]
    fn path_distribution() {
        let h = degree_distribution(&net(3, &[(0, 1, 1), (1, 2, 1)])).unwrap();
        assert_eq!(h.counts, BTreeMap::from([(1, 2), (2, 1)]));
        let rows = h.rows();
        assert_eq!(rows[0].ccdf, 1.0);
        assert!((rows[1].ccdf - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_network_errors() {
        let empty = net(0, &[]);
        assert_eq!(degree_distribution(&empty), Err(MetricsError::EmptyNetwork));
        assert_eq!(average_clustering(&empty, Exec::Sequential), Err(MetricsError::EmptyNetwork));
    }

    #[test]
    fn clustering_basics() {
        assert_eq!(local_clustering_weighted(&triangle(1), "v0").unwrap(), 1.0);
        assert_eq!(local_clustering_weighted(&net(3, &[(0, 1, 1), (1, 2, 1)]), "v1").unwrap(), 0.0);
        assert_eq!(average_clustering(&triangle(1), Exec::Sequential).unwrap(), 1.0);
        assert_eq!(average_clustering(&star(3), Exec::Sequential).unwrap(), 0.0);
        let k4 = net(4, &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]);
        assert_eq!(average_clustering(&k4, Exec::Parallel).unwrap(), 1.0);
    }

    #[test]
    fn weighted_triangle_with_pendant() {
        // Triangle 0-1-2 with w01=1, w02=3, w12=1, pendant 0-3 with weight 2.
        let g = net(4, &[(0, 1, 1), (0, 2, 3), (1, 2, 1), (0, 3, 2)]);
        // Ordered pairs (1,2) and (2,1) each contribute (1+3)/2 = 2;
        // s = 6, k = 3 → 4 / (6 * 2).
        let oracle = {
            let w = |a: u32, b: u32| g.weight(a, b).map(|x| x as f64);
            let nbrs: Vec<u32> = g.neighbors(0).iter().map(|&(n, _)| n).collect();
            let mut sum = 0.0;
            for &j in &nbrs {
                for &h in &nbrs {
                    if j != h && g.has_edge(j, h) {
                        sum += (w(0, j).unwrap() + w(0, h).unwrap()) / 2.0;
                    }
                }
            }
            sum / (6.0 * 2.0)
        };
        assert!((oracle - 1.0 / 3.0).abs() < 1e-15);
        assert!((clustering_at(&g, 0) - oracle).abs() < 1e-15);
    }

    #[test]
    fn summaries() {
        let s = network_summary(&triangle(2), Exec::Sequential).unwrap();
        assert_eq!(
            s,
            NetworkSummary { nodes: 3, edges: 3, total_weight: 6, average_degree: 2.0, average_clustering: 1.0 }
        );
        let s = network_summary(&net(2, &[(0, 1, 5)]), Exec::Sequential).unwrap();
        assert_eq!(
            s,
            NetworkSummary { nodes: 2, edges: 1, total_weight: 5, average_degree: 1.0, average_clustering: 0.0 }
        );
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"nodes":2,"edges":1,"total_weight":5,"average_degree":1.0,"#), "{json}");
    }

    #[test]
    fn zeta_matches_known_values() {
        // ζ(2) = π²/6, ζ(3) = Apéry's constant.
        assert!((hurwitz_zeta(2.0, 1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((hurwitz_zeta(3.0, 1) - 1.202_056_903_159_594_3).abs() < 1e-13);
        // ζ(2, 3) = ζ(2) − 1 − 1/4
        assert!((hurwitz_zeta(2.0, 3) - (std::f64::consts::PI.powi(2) / 6.0 - 1.25)).abs() < 1e-13);
    }

    #[test]
    fn log_sum_matches_finite_difference() {
        // Σ ln k · k^-s = −∂ζ/∂s
        for &(s, q) in &[(1.5, 1usize), (2.5, 1), (3.0, 7)] {
            let h = 1e-5;
            let deriv = (hurwitz_zeta(s + h, q) - hurwitz_zeta(s - h, q)) / (2.0 * h);
            let (_, l) = scaled_zeta_pair(s, q);
            let l = l * (q as f64).powf(-s);
            assert!((l + deriv).abs() < 1e-7 * l.abs(), "s={s} q={q}: {l} vs {}", -deriv);
        }
    }

    /// Inverse-CDF sampler for the discrete power law, independent of the fit.
    fn sample_power_law(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> Vec<usize> {
        let norm = hurwitz_zeta(alpha, 1);
        let kmax = 1_000_000usize;
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for k in 1..=kmax {
            acc += (k as f64).powf(-alpha) / norm;
            cdf.push(acc);
            if acc > 1.0 - 1e-12 {
                break;
            }
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen();
                cdf.partition_point(|&c| c < u) + 1
            })
            .collect()
    }

    #[test]
    fn recovers_planted_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hist = DegreeHistogram::from_degrees(sample_power_law(&mut rng, 2.5, 50_000));
        let fit = fit_power_law(&hist, 1).unwrap();
        assert!((fit.exponent - 2.5).abs() < 0.1, "{fit:?}");
        assert!(fit.ks_distance < 0.02);
    }

    #[test]
    fn fit_is_scale_invariant() {
        let hist = DegreeHistogram::from_degrees([1, 1, 1, 2, 2, 3, 5, 8, 13]);
        let doubled =
            DegreeHistogram { counts: hist.counts.iter().map(|(&k, &c)| (k, 2 * c)).collect(), n: 2 * hist.n };
        let a = fit_power_law(&hist, 1).unwrap();
        let b = fit_power_law(&doubled, 1).unwrap();
        assert!((a.exponent - b.exponent).abs() < 1e-12);
        assert!((a.ks_distance - b.ks_distance).abs() < 1e-12);
    }

    #[test]
    fn degenerate_histogram() {
        let hist = DegreeHistogram::from_degrees([4, 4, 4]);
        assert_eq!(fit_power_law(&hist, 1), Err(MetricsError::DegenerateHistogram { xmin: 1 }));
        assert_eq!(fit_power_law(&hist, 0), Err(MetricsError::InvalidXmin));
    }

    #[test]
    fn poisson_values() {
        let p = poisson_reference(1.0, &[0]).unwrap();
        assert!((p[0].1 - 0.367_879_441_171_442_3).abs() < 1e-12);
        let support: Vec<usize> = (0..200).collect();
        let total: f64 = poisson_reference(17.187, &support).unwrap().iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let curve = poisson_reference(17.187, &support).unwrap();
        let mode = curve.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
        assert_eq!(mode, 17);
        assert!(poisson_reference(0.0, &[0]).is_err());
        assert!(poisson_reference(-1.0, &[0]).is_err());
    }

    #[test]
    fn random_graph_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.gen_range(2..40usize);
            let mut edges = Vec::new();
            for a in 0..n as u32 {
                for b in a + 1..n as u32 {
                    if rng.gen_bool(0.3) {
                        edges.push((a, b, rng.gen_range(1..5)));
                    }
                }
            }
            let g = net(n, &edges);
            let h = degree_distribution(&g).unwrap();
            let handshake: usize = h.counts.iter().map(|(k, c)| k * c).sum();
            assert_eq!(handshake, 2 * g.edge_count());
            let rows = h.rows();
            assert!(rows.windows(2).all(|w| w[0].ccdf >= w[1].ccdf));
            assert!((rows.iter().map(|r| r.pdf).sum::<f64>() - 1.0).abs() < 1e-12);
            for i in 0..n as u32 {
                let c = clustering_at(&g, i);
                assert!((0.0..=1.0).contains(&c));
            }
        }
    }

    #[test]
    fn trees_have_zero_clustering() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60;
        let edges: Vec<_> = (1..n as u32).map(|i| (rng.gen_range(0..i), i, rng.gen_range(1..9))).collect();
        assert_eq!(average_clustering(&net(n, &edges), Exec::Parallel).unwrap(), 0.0);
    }
}
