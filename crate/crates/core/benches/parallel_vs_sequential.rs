use std::hint::black_box;

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use placeweave::metrics::average_clustering;
use placeweave::motifs::{enumerate_induced, MotifClass};
use placeweave::refnets::gen_uniform_edge_count;
use placeweave::synth::{gen_catalog, gen_device_days, BoundingBox, DateRange, TrafficSpec, WorldSpec};
use placeweave::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn enumeration(c: &mut Criterion) {
    let net = gen_uniform_edge_count(2_000, 17_000, 3).expect("valid size");
    let mut group = c.benchmark_group("enumerate_induced");
    group.sample_size(10);
    for k in [3, 4] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| enumerate_induced(black_box(&net), k, exec).expect("k in range"))
            });
        }
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let net = gen_uniform_edge_count(20_000, 170_000, 5).expect("valid size");
    let mut group = c.benchmark_group("average_clustering");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| average_clustering(black_box(&net), exec).expect("non-empty")));
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let world = WorldSpec {
        n_pois: 5_000,
        bbox: BoundingBox { lat_min: 29.5, lat_max: 30.1, lon_min: -95.8, lon_max: -95.0 },
        category_shares: [("44-45".to_string(), 0.4), ("72".to_string(), 0.6)].into(),
        seed: 1,
    };
    let catalog = gen_catalog(&world).expect("valid world");
    let traffic = TrafficSpec {
        n_device_days: 20_000,
        class_mix: MotifClass::MOTIFS.iter().map(|&c| (c, if c == MotifClass::M2_1 { 0.2 } else { 0.1 })).collect(),
        date_range: DateRange {
            start: NaiveDate::from_ymd_opt(2020, 2, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2020, 2, 29).expect("valid date"),
        },
        dwell_range: (600, 3600),
        seed: 2,
        utc_offset: -6,
        max_radius_km: None,
    };
    let mut group = c.benchmark_group("gen_device_days");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| gen_device_days(&catalog, black_box(&traffic), exec).expect("valid")));
    }
    group.finish();
}

criterion_group!(benches, enumeration, clustering, synthesis);
criterion_main!(benches);
