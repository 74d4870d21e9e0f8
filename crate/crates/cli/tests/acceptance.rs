//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the oracles here are written independently of the library code they
//! check. Runs without the test harness so the report is always shown.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use placeweave::attributes::{canonical_key, Digits};
use placeweave::ingest::{
    build_stay_sequences, filter_visits, parse_stops, retain_cataloged, write_stops, PoiCatalog, PoiRecord,
    StaySequence, DEFAULT_MIN_DWELL,
};
use placeweave::metrics::{degree_distribution, fit_power_law, local_clustering_weighted};
use placeweave::motifs::{
    census_percentages, classify_graph, classify_trajectories, enumerate_induced, MotifCensus, MotifClass,
    MotifInstance,
};
use placeweave::netbuild::{build_network, NetworkMode, PlaceNetwork};
use placeweave::refnets::{gen_random_network, gen_scale_free_network, gen_uniform_edge_count, RefNetKind, RefNetSpec};
use placeweave::stats::{haversine_km, EARTH_RADIUS_KM};
use placeweave::synth::{gen_catalog, gen_device_days, BoundingBox, DateRange, TrafficSpec, WorldSpec};
use placeweave::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

// ---------------------------------------------------------------- oracles

type ClassGraph = (MotifClass, usize, Vec<(usize, usize)>);

/// Class graphs drawn by hand, one per motif class.
fn class_graphs() -> Vec<ClassGraph> {
    vec![
        (MotifClass::M2_1, 2, vec![(0, 1)]),
        (MotifClass::M3_1, 3, vec![(0, 1), (1, 2)]),
        (MotifClass::M3_2, 3, vec![(0, 1), (1, 2), (0, 2)]),
        (MotifClass::M4_1, 4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
        (MotifClass::M4_2, 4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]),
        (MotifClass::M4_3, 4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]),
        (MotifClass::M4_4, 4, vec![(0, 1), (1, 2), (0, 2), (2, 3)]),
        (MotifClass::M4_5, 4, vec![(0, 1), (1, 2), (2, 3)]),
        (MotifClass::M4_6, 4, vec![(0, 1), (0, 2), (0, 3)]),
    ]
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 0..n {
            if !prefix.contains(&v) {
                prefix.push(v);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

fn edge_set(edges: &[(usize, usize)], perm: &[usize]) -> BTreeSet<(usize, usize)> {
    edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (perm[a], perm[b]);
            (x.min(y), x.max(y))
        })
        .collect()
}

/// Class by trying every vertex permutation against the class graphs;
/// `None` when no class matches.
fn oracle_class(n: usize, edges: &[(usize, usize)]) -> Option<MotifClass> {
    let target = edge_set(edges, &(0..n).collect::<Vec<_>>());
    let graphs = class_graphs();
    let perms = permutations(n);
    graphs
        .iter()
        .filter(|(_, size, _)| *size == n)
        .find(|(_, _, g)| perms.iter().any(|p| edge_set(g, p) == target))
        .map(|(c, _, _)| *c)
}

/// Labeled isomorphism on one class graph.
fn attributed_iso(edges: &[(usize, usize)], l1: &[u8], l2: &[u8]) -> bool {
    let n = l1.len();
    let base = edge_set(edges, &(0..n).collect::<Vec<_>>());
    permutations(n).iter().any(|p| edge_set(edges, p) == base && (0..n).all(|v| l1[v] == l2[p[v]]))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    edges
}

fn to_network(n: usize, edges: &[(usize, usize)], weights: Option<&[u64]>) -> PlaceNetwork {
    let e: Vec<(u32, u32, u64)> =
        edges.iter().enumerate().map(|(i, &(a, b))| (a as u32, b as u32, weights.map_or(1, |w| w[i]))).collect();
    PlaceNetwork::from_index_edges(n, &e).expect("valid edges")
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            go(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------- harness

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    /// Failure accepted only because the machine cannot measure it.
    hardware_bound: bool,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1_classifier() -> Outcome {
    let (mismatches, took) = timed(|| {
        let mut bad = Vec::new();
        let mut graphs = 0;
        for n in 2..=4usize {
            let pairs = subsets(n, 2);
            for mask in 0u32..(1 << pairs.len()) {
                let edges: Vec<(usize, usize)> =
                    pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| (p[0], p[1])).collect();
                graphs += 1;
                let want = oracle_class(n, &edges).unwrap_or(MotifClass::Other);
                let got = classify_graph(n, &edges).expect("valid graph");
                if got != want {
                    bad.push(format!("n={n} {edges:?}: {got} vs {want}"));
                }
            }
        }
        (graphs, bad)
    });
    let ((graphs, bad), took) = (mismatches, took);
    Outcome {
        id: 1,
        title: "classifier agrees with brute-force isomorphism",
        pass: graphs == 74 && bad.is_empty() && took < Duration::from_secs(1),
        detail: format!("{graphs} labeled graphs, {} mismatches, {:.3} s", bad.len(), took.as_secs_f64()),
        hardware_bound: false,
    }
}

fn c2_enumeration() -> Outcome {
    let (result, took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut bad = Vec::new();
        for seed in 0..50 {
            let n = rng.gen_range(4..=25);
            let p = rng.gen_range(0.1..0.5);
            let edges = random_graph(&mut rng, n, p);
            let adj: BTreeSet<(usize, usize)> = edges.iter().copied().collect();
            let net = to_network(n, &edges, None);
            for k in 2..=4 {
                let mut want: BTreeMap<MotifClass, u64> = BTreeMap::new();
                for s in subsets(n, k) {
                    let local: Vec<(usize, usize)> = subsets(k, 2)
                        .into_iter()
                        .filter(|q| adj.contains(&(s[q[0]], s[q[1]])))
                        .map(|q| (q[0], q[1]))
                        .collect();
                    if let Some(c) = oracle_class(k, &local) {
                        *want.entry(c).or_insert(0) += 1;
                    }
                }
                let got = enumerate_induced(&net, k, Exec::Parallel).expect("k in range");
                let got: BTreeMap<MotifClass, u64> = got.iter().filter(|(_, n)| *n > 0).collect();
                if got != want {
                    bad.push(format!("graph {seed} k={k}"));
                }
            }
        }
        bad
    });
    Outcome {
        id: 2,
        title: "enumeration equals brute-force subset census",
        pass: result.is_empty() && took < Duration::from_secs(30),
        detail: format!("50 graphs x k=2..4, {} mismatches {:?}, {:.2} s", result.len(), result, took.as_secs_f64()),
        hardware_bound: false,
    }
}

fn random_sequences(rng: &mut ChaCha8Rng, count: usize) -> Vec<StaySequence> {
    let start = NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date");
    (0..count)
        .map(|i| {
            let pool = rng.gen_range(2..=6);
            let len = rng.gen_range(2..=9);
            let mut stays: Vec<String> = Vec::new();
            while stays.len() < len {
                let poi = format!("q{}", rng.gen_range(0..pool) + 10 * rng.gen_range(0..3));
                if stays.last() != Some(&poi) {
                    stays.push(poi);
                }
            }
            StaySequence {
                device_id: format!("d{}", i / 7),
                local_date: start + chrono::Days::new((i % 7) as u64),
                stays,
            }
        })
        .collect()
}

fn c3_census_identities() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for round in 0..20 {
        let seqs = random_sequences(&mut rng, 500);
        let census = classify_trajectories(&seqs, Exec::Parallel).census;
        for class in MotifClass::MOTIFS {
            let row = census.row(class);
            let edges = class_graphs().into_iter().find(|g| g.0 == class).expect("class graph").2.len() as u64;
            if row.flow_count != row.device_count * edges {
                problems.push(format!("round {round} {class}"));
            }
        }
        let classified: u64 = MotifClass::MOTIFS.iter().map(|&c| census.row(c).device_count).sum();
        if classified > seqs.len() as u64 {
            problems.push(format!("round {round}: {classified} classified of {}", seqs.len()));
        }
    }

    // County-scale motif counts, global total first.
    let county = [85237u64, 1210, 1441, 13007, 29304, 24045, 6418, 34, 256, 375];
    let mut census = MotifCensus::default();
    census.global.motif_count = county[0];
    for (class, &count) in MotifClass::MOTIFS.iter().zip(&county[1..]) {
        census.row_mut(*class).motif_count = count;
    }
    let pct = census_percentages(&census).expect("non-zero total");
    let m21 = format!("{:.2}", pct.row(MotifClass::M2_1).percentage.expect("filled"));
    let nine: u64 = county[1..].iter().sum();
    let nine_pct = format!("{:.2}", 100.0 * nine as f64 / county[0] as f64);
    let summed =
        format!("{:.2}", MotifClass::MOTIFS.iter().map(|&c| pct.row(c).percentage.unwrap_or(0.0)).sum::<f64>());
    if m21 != "1.42" || nine_pct != "89.27" || summed != "89.27" || nine != 76090 {
        problems.push(format!("percentages {m21} / {nine_pct} / {summed}"));
    }
    Outcome {
        id: 3,
        title: "census identities and published percentages",
        pass: problems.is_empty(),
        detail: format!(
            "flow identity on 20 random inputs, M2-1 {m21}%, nine classes {summed}%, problems {problems:?}"
        ),
        hardware_bound: false,
    }
}

fn c4_planted_recovery() -> Outcome {
    let (result, took) = timed(|| -> Result<String, String> {
        let world = WorldSpec {
            n_pois: 20_000,
            bbox: BoundingBox { lat_min: 29.5, lat_max: 30.1, lon_min: -95.8, lon_max: -95.0 },
            category_shares: [("44-45", 0.3), ("72", 0.3), ("62", 0.2), ("81", 0.2)]
                .iter()
                .map(|&(c, p)| (c.to_string(), p))
                .collect(),
            seed: 41,
        };
        let mix = [0.2, 0.15, 0.1, 0.05, 0.1, 0.1, 0.1, 0.1, 0.1];
        let traffic = TrafficSpec {
            n_device_days: 50_000,
            class_mix: MotifClass::MOTIFS.iter().copied().zip(mix).collect(),
            date_range: DateRange {
                start: NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid"),
                end: NaiveDate::from_ymd_opt(2020, 2, 28).expect("valid"),
            },
            dwell_range: (600, 3600),
            seed: 42,
            utc_offset: -6,
            max_radius_km: None,
        };
        let catalog = gen_catalog(&world).map_err(|e| e.to_string())?;
        let generated = gen_device_days(&catalog, &traffic, Exec::Parallel).map_err(|e| e.to_string())?;

        let mut buf = Vec::new();
        write_stops(&mut buf, &generated.stops).map_err(|e| e.to_string())?;
        let parsed = parse_stops(buf.as_slice()).map_err(|e| e.to_string())?;
        if !parsed.rejected.is_empty() {
            return Err(format!("{} stops rejected by ingest", parsed.rejected.len()));
        }
        let visits = filter_visits(&parsed.records, DEFAULT_MIN_DWELL);
        let (kept, dropped) = retain_cataloged(&visits, &catalog);
        if visits.len() != parsed.records.len() || dropped != 0 {
            return Err("generated stops failed the visit filters".into());
        }
        let seqs = build_stay_sequences(&kept, traffic.utc_offset);
        let network = build_network(&seqs, NetworkMode::Consecutive).map_err(|e| e.to_string())?;
        let flows: u64 = seqs.iter().map(|s| s.stays.len() as u64 - 1).sum();
        if network.total_weight() != flows {
            return Err(format!("network weight {} != {flows} consecutive pairs", network.total_weight()));
        }

        let planted: BTreeMap<(String, NaiveDate), MotifClass> =
            generated.planted.iter().map(|p| ((p.device_id.clone(), p.local_date), p.class)).collect();
        let recovered = seqs
            .iter()
            .filter(|s| {
                let tc = classify_trajectories(std::slice::from_ref(*s), Exec::Sequential);
                let got = tc.instances.first().map(|t| t.instance.class);
                got.is_some() && got == planted.get(&(s.device_id.clone(), s.local_date)).copied()
            })
            .count();
        let census = classify_trajectories(&seqs, Exec::Parallel).census;
        let n = traffic.n_device_days as f64;
        let worst = MotifClass::MOTIFS
            .iter()
            .zip(mix)
            .map(|(&c, p)| (census.row(c).device_count as f64 / n - p).abs())
            .fold(0.0, f64::max);
        let detail =
            format!("{recovered}/{} device-days recovered, worst share gap {:.4}", generated.planted.len(), worst);
        if recovered == 50_000 && seqs.len() == 50_000 && worst <= 0.01 {
            Ok(detail)
        } else {
            Err(detail)
        }
    });
    let pass = result.is_ok() && took < Duration::from_secs(60);
    Outcome {
        id: 4,
        title: "planted classes recovered end to end",
        pass,
        detail: format!("{}, {:.2} s", result.unwrap_or_else(|e| e), took.as_secs_f64()),
        hardware_bound: false,
    }
}

fn c5_reference_networks() -> Outcome {
    let (result, took) = timed(|| {
        let lambda = 17.187;
        let mut pooled: BTreeMap<usize, u64> = BTreeMap::new();
        let mut total = 0u64;
        for seed in 0..20 {
            let spec = RefNetSpec { kind: RefNetKind::Random, n: 5000, target_average_degree: lambda, seed };
            let g = gen_random_network(&spec).expect("valid spec");
            for (k, c) in degree_distribution(&g).expect("non-empty").counts {
                *pooled.entry(k).or_insert(0) += c as u64;
                total += c as u64;
            }
        }
        // Bins with expected count >= 5; the two tails absorb the rest.
        let poisson = Poisson::new(lambda).expect("positive rate");
        let expected = |k: u64| poisson.pmf(k) * total as f64;
        let mut lo = 0u64;
        while poisson.cdf(lo) * (total as f64) < 5.0 {
            lo += 1;
        }
        let mut hi = lo;
        while expected(hi + 1) >= 5.0 && (1.0 - poisson.cdf(hi + 1)) * (total as f64) >= 5.0 {
            hi += 1;
        }
        let observed = |range: &dyn Fn(u64) -> bool| -> f64 {
            pooled.iter().filter(|(&k, _)| range(k as u64)).map(|(_, &c)| c as f64).sum()
        };
        let mut bins: Vec<(f64, f64)> = vec![(observed(&|k| k <= lo), poisson.cdf(lo) * total as f64)];
        for k in lo + 1..=hi {
            bins.push((observed(&|x| x == k), expected(k)));
        }
        bins.push((observed(&|k| k > hi), (1.0 - poisson.cdf(hi)) * total as f64));
        let chi2: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let df = (bins.len() - 1) as f64;
        let critical = ChiSquared::new(df).expect("df > 0").inverse_cdf(0.99);

        let ba = gen_scale_free_network(&RefNetSpec {
            kind: RefNetKind::ScaleFree,
            n: 10_000,
            target_average_degree: 16.0,
            seed: 5,
        })
        .expect("valid spec");
        let fit = fit_power_law(&degree_distribution(&ba).expect("non-empty"), 8).expect("fit");
        (chi2, critical, df, fit.exponent)
    });
    let (chi2, critical, df, alpha) = result;
    Outcome {
        id: 5,
        title: "reference network statistics",
        pass: chi2 < critical && (2.5..=3.5).contains(&alpha) && took < Duration::from_secs(60),
        detail: format!(
            "ER chi2 {chi2:.2} vs critical {critical:.2} (df {df}), BA exponent {alpha:.3}, {:.2} s",
            took.as_secs_f64()
        ),
        hardware_bound: false,
    }
}

/// Direct double sum over ordered neighbour pairs.
fn barrat_oracle(n: usize, w: &[Vec<u64>], i: usize) -> f64 {
    let nbrs: Vec<usize> = (0..n).filter(|&j| w[i][j] > 0).collect();
    let k = nbrs.len() as f64;
    if nbrs.len() < 2 {
        return 0.0;
    }
    let s: f64 = nbrs.iter().map(|&j| w[i][j] as f64).sum();
    let mut acc = 0.0;
    for &j in &nbrs {
        for &h in &nbrs {
            if j != h && w[j][h] > 0 {
                acc += (w[i][j] + w[i][h]) as f64 / 2.0;
            }
        }
    }
    acc / (s * (k - 1.0))
}

fn c6_weighted_clustering() -> Outcome {
    let (worst, took) = timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut worst_weighted: f64 = 0.0;
        let mut worst_equal: f64 = 0.0;
        for _ in 0..20 {
            let n = rng.gen_range(3..=50);
            let p = rng.gen_range(0.05..0.6);
            let edges = random_graph(&mut rng, n, p);
            let weights: Vec<u64> = edges.iter().map(|_| rng.gen_range(1..=20)).collect();
            let mut w = vec![vec![0u64; n]; n];
            for (&(a, b), &x) in edges.iter().zip(&weights) {
                w[a][b] = x;
                w[b][a] = x;
            }
            let net = to_network(n, &edges, Some(&weights));
            let flat = to_network(n, &edges, Some(&vec![7; edges.len()]));
            for i in 0..n {
                let id = net.node_id(i as u32).to_owned();
                let got = local_clustering_weighted(&net, &id).expect("known node");
                worst_weighted = worst_weighted.max((got - barrat_oracle(n, &w, i)).abs());
                // Unweighted: closed triangles over possible pairs.
                let nb: Vec<usize> = (0..n).filter(|&j| w[i][j] > 0).collect();
                let k = nb.len();
                let tri = subsets(k, 2).iter().filter(|p| w[nb[p[0]]][nb[p[1]]] > 0).count();
                let plain = if k < 2 { 0.0 } else { tri as f64 / (k * (k - 1) / 2) as f64 };
                let got = local_clustering_weighted(&flat, &id).expect("known node");
                worst_equal = worst_equal.max((got - plain).abs());
            }
        }
        (worst_weighted, worst_equal)
    });
    let (ww, we) = worst;
    Outcome {
        id: 6,
        title: "weighted clustering matches direct summation",
        pass: ww <= 1e-12 && we <= 1e-12 && took < Duration::from_secs(5),
        detail: format!("max error weighted {ww:.2e}, equal weights {we:.2e}, {:.3} s", took.as_secs_f64()),
        hardware_bound: false,
    }
}

fn c7_geodesy() -> Outcome {
    let rel = |got: f64, want: f64| if want == 0.0 { got.abs() } else { (got - want).abs() / want };
    let half = std::f64::consts::PI * EARTH_RADIUS_KM;
    let checks = [
        rel(haversine_km(40.7, -74.0, 40.7, -74.0).unwrap(), 0.0),
        rel(haversine_km(0.0, 0.0, 0.0, 180.0).unwrap(), half),
        rel(haversine_km(0.0, 30.0, 0.0, -150.0).unwrap(), half),
        rel(haversine_km(0.0, 10.0, 0.0, 11.0).unwrap(), half / 180.0),
        rel(haversine_km(10.0, 20.0, 11.0, 20.0).unwrap(), half / 180.0),
    ];
    let worst = checks.iter().cloned().fold(0.0, f64::max);
    Outcome {
        id: 7,
        title: "haversine closed forms",
        pass: worst <= 1e-9,
        detail: format!("max relative error {worst:.2e}"),
        hardware_bound: false,
    }
}

fn c8_attributed_keys() -> Outcome {
    const NAICS: [&str; 3] = ["4411", "7225", "6211"];
    let (result, took) = timed(|| {
        let mut bad = Vec::new();
        let mut comparisons = 0u64;
        for (class, n, edges) in class_graphs() {
            let labelings: Vec<Vec<u8>> = (0..3usize.pow(n as u32))
                .map(|mut x| {
                    (0..n)
                        .map(|_| {
                            let d = (x % 3) as u8;
                            x /= 3;
                            d
                        })
                        .collect()
                })
                .collect();
            let perms = permutations(n);
            let key_of = |labels: &[u8], perm: &[usize]| {
                // Vertex v becomes POI `p{perm[v]}`, so node order varies.
                let ids: Vec<String> = (0..n).map(|v| format!("p{}", perm[v])).collect();
                let catalog = PoiCatalog::from_records((0..n).map(|v| PoiRecord {
                    poi_id: ids[v].clone(),
                    name: ids[v].clone(),
                    lat: 0.0,
                    lon: 0.0,
                    naics: NAICS[labels[v] as usize].to_owned(),
                }))
                .expect("valid catalog");
                let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
                let id_edges: Vec<(&str, &str)> = edges.iter().map(|&(a, b)| (id_refs[a], id_refs[b])).collect();
                let inst = MotifInstance::from_id_edges(&id_refs, &id_edges).expect("valid instance");
                canonical_key(&inst, &catalog, Digits::Two).expect("resolvable")
            };
            let keys: Vec<_> = labelings.iter().map(|l| key_of(l, &perms[0])).collect();
            for (l, key) in labelings.iter().zip(&keys) {
                if key.class != class {
                    bad.push(format!("{class}: key class {}", key.class));
                }
                for p in &perms[1..] {
                    if key_of(l, p) != *key {
                        bad.push(format!("{class} {l:?}: node order changes the key"));
                    }
                }
            }
            for (i, a) in labelings.iter().enumerate() {
                for (j, b) in labelings.iter().enumerate() {
                    comparisons += 1;
                    if (keys[i] == keys[j]) != attributed_iso(&edges, a, b) {
                        bad.push(format!("{class} {a:?} vs {b:?}"));
                    }
                }
            }
        }
        (comparisons, bad)
    });
    let ((comparisons, bad), took) = (result, took);
    Outcome {
        id: 8,
        title: "attributed keys equal brute-force labeled isomorphism",
        pass: bad.is_empty() && took < Duration::from_secs(10),
        detail: format!(
            "{comparisons} labeling pairs over nine classes, {} mismatches {:?}, {:.2} s",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>(),
            took.as_secs_f64()
        ),
        hardware_bound: false,
    }
}

fn census_on(threads: usize, net: &PlaceNetwork) -> (placeweave::motifs::ClassCounts, Duration) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| timed(|| enumerate_induced(net, 4, Exec::Parallel).expect("k = 4")))
}

fn c9_performance() -> Outcome {
    let net = gen_uniform_edge_count(15_931, 136_904, 9).expect("valid size");
    let (one, t1) = census_on(1, &net);
    let (eight, t8) = census_on(8, &net);
    let speedup = t1.as_secs_f64() / t8.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let consistent = one == eight;
    let fast = t1 < Duration::from_secs(120);
    let scales = speedup >= 3.0;
    Outcome {
        id: 9,
        title: "4-node census at county scale",
        pass: consistent && fast && scales,
        detail: format!(
            "{} nodes / {} edges, {} subgraphs, 1 thread {:.2} s, 8 threads {:.2} s, speedup {speedup:.2}x \
             (needs 3x), identical counts {consistent}, {cores} hardware threads",
            net.node_count(),
            net.edge_count(),
            one.total(),
            t1.as_secs_f64(),
            t8.as_secs_f64()
        ),
        // Only the scaling part may fail, and only on machines that cannot
        // run eight threads concurrently.
        hardware_bound: consistent && fast && !scales && cores < 8,
    }
}

fn tree_bytes(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_owned()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    out
}

fn placeweave(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_placeweave"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let root = dir.path();
    std::fs::write(
        root.join("world.json"),
        r#"{"n_pois": 1500, "bbox": {"lat_min": 29.5, "lat_max": 30.1, "lon_min": -95.8, "lon_max": -95.0},
            "category_shares": {"44-45": 0.3, "72": 0.3, "62": 0.2, "81": 0.2}, "seed": 10}"#,
    )
    .expect("write spec");
    std::fs::write(
        root.join("traffic.json"),
        r#"{"n_device_days": 4000,
            "class_mix": {"M2-1": 0.2, "M3-1": 0.15, "M3-2": 0.1, "M4-1": 0.05, "M4-2": 0.1,
                          "M4-3": 0.1, "M4-4": 0.1, "M4-5": 0.1, "M4-6": 0.1},
            "date_range": {"start": "2020-02-01", "end": "2020-02-28"},
            "seed": 11, "utc_offset": -6, "max_radius_km": 8.0}"#,
    )
    .expect("write spec");
    std::fs::write(root.join("config.json"), r#"{"utc_offset": -6, "seed": 3}"#).expect("write config");
    let mut ok = placeweave(&["synth", "--world", "world.json", "--traffic", "traffic.json", "--out", "fixture"], root);
    for (threads, out) in [("1", "a"), ("1", "b"), ("8", "c")] {
        ok &= placeweave(
            &[
                "--config",
                "config.json",
                "--threads",
                threads,
                "run",
                "--stops",
                "fixture/stops.csv",
                "--pois",
                "fixture/pois.csv",
                "--out",
                out,
            ],
            root,
        );
    }
    let (a, b, c) = if ok {
        (tree_bytes(&root.join("a")), tree_bytes(&root.join("b")), tree_bytes(&root.join("c")))
    } else {
        Default::default()
    };
    let pass = ok && !a.is_empty() && a.contains_key("report.json") && a == b && a == c;
    Outcome {
        id: 10,
        title: "full run is byte-identical across runs and thread counts",
        pass,
        detail: format!("runs succeeded {ok}, {} files compared, identical {}", a.len(), a == b && a == c),
        hardware_bound: false,
    }
}

fn main() -> std::process::ExitCode {
    let outcomes = [
        c1_classifier(),
        c2_enumeration(),
        c3_census_identities(),
        c4_planted_recovery(),
        c5_reference_networks(),
        c6_weighted_clustering(),
        c7_geodesy(),
        c8_attributed_keys(),
        c9_performance(),
        c10_determinism(),
    ];
    for o in &outcomes {
        println!("criterion {:>2} {}: {} ({})", o.id, if o.pass { "PASS" } else { "FAIL" }, o.title, o.detail);
    }
    let blocking: Vec<u32> = outcomes.iter().filter(|o| !o.pass && !o.hardware_bound).map(|o| o.id).collect();
    if blocking.is_empty() {
        std::process::ExitCode::SUCCESS
    } else {
        eprintln!("failing criteria: {blocking:?}");
        std::process::ExitCode::FAILURE
    }
}
