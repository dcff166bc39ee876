//! Benchmarks for the hot paths: the fluid transfer solver, one adaptation
//! decision, a full session on the bundled scenario, and CDF reduction.

use std::path::PathBuf;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use hassim_core::adaptation::{vasr_decide, AdaptationParams, ClientState};
use hassim_core::controller::{ControllerParams, PolicyKind};
use hassim_core::metrics::cdf;
use hassim_core::netmodel::BandwidthTrace;
use hassim_core::{run_session, AlgorithmConfig, SessionConfig, Topology, VideoCatalog};

fn assets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn bench_transfer(c: &mut Criterion) {
    let samples: Vec<(f64, f64)> = (0..600)
        .map(|i| (i as f64, 500.0 + 9500.0 * ((i * 37 % 101) as f64 / 100.0)))
        .collect();
    let trace = BandwidthTrace::new(samples, 650.0).unwrap();
    c.bench_function("transfer_finish_time/600-step trace", |b| {
        b.iter(|| {
            trace
                .transfer_finish_time(black_box(3.5), black_box(1.5e6))
                .unwrap()
        })
    });
}

fn bench_decide(c: &mut Criterion) {
    let catalog = VideoCatalog::load(&assets_dir().join("elephants_dream.catalog.json")).unwrap();
    let params = AdaptationParams::default();
    let state = ClientState {
        buffer_s: 18.0,
        version_index: 7,
        smoothed_throughput_kbps: 6200.0,
        last_throughput_kbps: 4100.0,
        last_segment_bitrate_kbps: 3950.0,
        segments_downloaded: 80,
    };
    c.bench_function("vasr_decide", |b| {
        b.iter(|| vasr_decide(black_box(&state), &catalog, &params))
    });
}

fn bench_session(c: &mut Criterion) {
    let catalog = VideoCatalog::load(&assets_dir().join("elephants_dream.catalog.json")).unwrap();
    let topology = Topology::load(&assets_dir().join("congested_multipath.scenario.json")).unwrap();
    let config = SessionConfig {
        catalog: &catalog,
        topology: &topology,
        algorithm: AlgorithmConfig::Vasr(AdaptationParams {
            gamma: 0.5,
            mu: 0.2,
            ..AdaptationParams::default()
        }),
        controller: ControllerParams {
            policy: PolicyKind::Sarm,
            ..ControllerParams::fixed()
        },
        start_version: 0,
    };
    c.bench_function("run_session/bundled scenario, sarm", |b| {
        b.iter(|| run_session(black_box(&config)).unwrap())
    });
}

fn bench_cdf(c: &mut Criterion) {
    let values: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 4096) as f64).collect();
    c.bench_function("cdf/10k values", |b| {
        b.iter(|| cdf(black_box(&values)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_transfer,
    bench_decide,
    bench_session,
    bench_cdf
);
criterion_main!(benches);
