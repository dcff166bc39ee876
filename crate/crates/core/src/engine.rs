//! The per-session discrete-event simulator: drives segment requests,
//! download timing over the active path (including mid-download path
//! changes), buffer dynamics and stalls, and controller interaction.
//!
//! A session is single-threaded and fully deterministic: identical
//! configurations produce identical logs.

use std::fmt::Write as _;

use crate::adaptation::{
    aggressive_decide, sara_decide, update_smoothed_throughput, vasr_decide, AdaptationParams,
    ClientState, Decision, SaraHistory, SaraParams, Zone,
};
use crate::catalog::VideoCatalog;
use crate::controller::{Controller, ControllerParams};
use crate::netmodel::Topology;
use crate::{Error, Result};

/// Residual kilobits below which a partially delivered transfer counts as
/// complete (absorbs float rounding at path-change instants).
const REMAINING_EPS_KBITS: f64 = 1e-9;

/// Which adaptation algorithm drives the client, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgorithmConfig {
    Vasr(AdaptationParams),
    Aggressive {
        /// Playout buffer capacity; the only knob the instant-throughput
        /// baseline needs.
        buffer_cap_s: f64,
    },
    Sara(SaraParams),
}

impl AlgorithmConfig {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmConfig::Vasr(_) => "vasr",
            AlgorithmConfig::Aggressive { .. } => "aggressive",
            AlgorithmConfig::Sara(_) => "sara",
        }
    }

    fn validate(&self, segment_duration_s: f64) -> Result<()> {
        let cap = match self {
            AlgorithmConfig::Vasr(p) => {
                p.validate()?;
                p.b_max_s
            }
            AlgorithmConfig::Aggressive { buffer_cap_s } => *buffer_cap_s,
            AlgorithmConfig::Sara(p) => {
                p.validate()?;
                p.b_max_s
            }
        };
        if !cap.is_finite() || cap <= segment_duration_s {
            return Err(Error::Invalid(format!(
                "buffer capacity {cap}s must exceed the segment duration \
                 {segment_duration_s}s"
            )));
        }
        Ok(())
    }

    /// Buffer level above which the next request is delayed, so that
    /// admission keeps the buffer within its capacity (and, for SARA,
    /// below its upper operating threshold).
    fn request_cap_s(&self, segment_duration_s: f64) -> f64 {
        match self {
            AlgorithmConfig::Vasr(p) => p.b_max_s - segment_duration_s,
            AlgorithmConfig::Aggressive { buffer_cap_s } => buffer_cap_s - segment_duration_s,
            AlgorithmConfig::Sara(p) => (p.b_max_s - segment_duration_s).min(p.b_beta_s),
        }
    }
}

/// One streaming session to simulate.
#[derive(Debug, Clone)]
pub struct SessionConfig<'a> {
    pub catalog: &'a VideoCatalog,
    pub topology: &'a Topology,
    pub algorithm: AlgorithmConfig,
    pub controller: ControllerParams,
    /// Version forced for the very first segment.
    pub start_version: usize,
}

/// Everything recorded about one downloaded segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRecord {
    pub seg_index: usize,
    pub version: usize,
    pub actual_bitrate_kbps: f64,
    pub size_kbits: f64,
    pub request_time_s: f64,
    pub finish_time_s: f64,
    pub measured_throughput_kbps: f64,
    pub buffer_after_s: f64,
    /// Path that carried the final bits of this segment.
    pub active_path: usize,
    pub zone: Zone,
    pub rerouted: bool,
    /// Rebuffering charged to this segment's download.
    pub stall_s: f64,
}

/// Column order of the per-segment CSV log.
pub const SEGMENTS_CSV_HEADER: &str = "seg_index,version,actual_bitrate_kbps,size_kbits,\
request_time_s,finish_time_s,measured_throughput_kbps,buffer_after_s,path_id,zone,rerouted,\
stall_s";

/// Full outcome of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub records: Vec<SegmentRecord>,
    pub total_stall_s: f64,
    pub wall_end_s: f64,
    /// Set when the trace horizon ran out before the last segment; the log
    /// then covers only the completed segments.
    pub truncated: bool,
    pub segment_duration_s: f64,
}

impl SessionLog {
    /// Playback begins when the first segment lands.
    pub fn playback_start_s(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.finish_time_s)
    }

    /// Renders the per-segment log with fixed 6-decimal floats for
    /// byte-exact regression diffs.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(128 * (self.records.len() + 1));
        out.push_str(SEGMENTS_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{},{:.6}",
                r.seg_index,
                r.version,
                r.actual_bitrate_kbps,
                r.size_kbits,
                r.request_time_s,
                r.finish_time_s,
                r.measured_throughput_kbps,
                r.buffer_after_s,
                r.active_path,
                r.zone.as_str(),
                r.rerouted,
                r.stall_s
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// Buffer recursion for one completed download: playback drains the buffer
/// for the duration of the download (pausing at zero, which is counted as
/// stall) and the finished segment tops it up.
pub fn buffer_after_download(
    buffer_before_s: f64,
    download_time_s: f64,
    segment_duration_s: f64,
) -> (f64, f64) {
    let drained = buffer_before_s.min(download_time_s);
    let stall = download_time_s - drained;
    (buffer_before_s - drained + segment_duration_s, stall)
}

/// Runs one session to completion (or to horizon exhaustion, which yields a
/// truncated log).
pub fn run_session(config: &SessionConfig) -> Result<SessionLog> {
    let catalog = config.catalog;
    let topology = config.topology;
    let duration = catalog.segment_duration_s;
    let num_segments = catalog.num_segments();
    let horizon = topology.horizon_s();

    config.algorithm.validate(duration)?;
    if config.start_version > catalog.top_version() {
        return Err(Error::OutOfRange(format!(
            "start_version {} (catalog top is {})",
            config.start_version,
            catalog.top_version()
        )));
    }
    let request_cap = config.algorithm.request_cap_s(duration);
    let gamma = match &config.algorithm {
        AlgorithmConfig::Vasr(p) => p.gamma,
        // The baselines never read the smoothed estimate; it is still
        // maintained so their logs carry comparable state.
        _ => AdaptationParams::default().gamma,
    };

    let mut controller = Controller::new(config.controller, topology, 0.0)?;
    let mut client = ClientState {
        buffer_s: 0.0,
        version_index: config.start_version,
        smoothed_throughput_kbps: 0.0,
        last_throughput_kbps: 0.0,
        last_segment_bitrate_kbps: 0.0,
        segments_downloaded: 0,
    };
    let mut sara_history = SaraHistory::default();
    let mut records: Vec<SegmentRecord> = Vec::with_capacity(num_segments);
    let mut total_stall = 0.0;
    let mut now = 0.0;

    let truncate = |records: Vec<SegmentRecord>, total_stall: f64, at: f64| SessionLog {
        records,
        total_stall_s: total_stall,
        wall_end_s: at,
        truncated: true,
        segment_duration_s: duration,
    };

    for seg in 0..num_segments {
        // Admission: delay the request until the buffer has drained to the
        // cap. Playback continues during the wait.
        let wait = (client.buffer_s - request_cap).max(0.0);
        let request_time = now + wait;
        client.buffer_s -= wait;
        if request_time >= horizon {
            return Ok(truncate(records, total_stall, now));
        }
        controller.advance_to(request_time)?;

        let decision = if seg == 0 {
            // The session always opens with the configured start version.
            Decision {
                next_version: config.start_version,
                reroute_requested: false,
                zone: Zone::Stable,
            }
        } else {
            match &config.algorithm {
                AlgorithmConfig::Vasr(p) => vasr_decide(&client, catalog, p),
                AlgorithmConfig::Aggressive { .. } => aggressive_decide(&client, catalog),
                AlgorithmConfig::Sara(p) => sara_decide(&client, &sara_history, catalog, p),
            }
        };
        if decision.reroute_requested {
            controller.on_reroute_request(request_time);
        }

        let version = decision.next_version;
        let size = catalog.segment_size_kbits(version, seg)?;
        let mut remaining = size;
        let mut cur = request_time;
        // Piecewise fluid continuation: whenever the controller changes the
        // active path mid-download, the remaining kilobits continue on the
        // new path's trace from the switch instant.
        let finish = loop {
            let trace = &topology.paths()[controller.active_path()].trace;
            let next_event = controller.next_event_time();
            // Where the download would end if the active path never changed.
            let cut = match trace.transfer_finish_time(cur, remaining) {
                Ok(f) => match next_event {
                    Some(e) if e < f => e,
                    _ => break f,
                },
                // Stalled on this path; a pending path change may rescue the
                // transfer, otherwise the session is over.
                Err(Error::HorizonExhausted { .. }) => match next_event {
                    Some(e) if e < horizon => e,
                    _ => return Ok(truncate(records, total_stall, cur)),
                },
                Err(err) => return Err(err),
            };
            remaining -= trace.integral_kbits(cur, cut)?;
            cur = cut;
            controller.advance_to(cut)?;
            if remaining <= REMAINING_EPS_KBITS {
                break cut;
            }
        };

        let download_time = finish - request_time;
        let throughput = size / download_time;
        let (buffer_after, stall) = if seg == 0 {
            // Startup delay, not a stall: playback only begins once the
            // first segment has landed.
            (duration, 0.0)
        } else {
            buffer_after_download(client.buffer_s, download_time, duration)
        };
        total_stall += stall;

        let actual_bitrate = catalog.versions[version].segment_bitrates_kbps[seg];
        records.push(SegmentRecord {
            seg_index: seg,
            version,
            actual_bitrate_kbps: actual_bitrate,
            size_kbits: size,
            request_time_s: request_time,
            finish_time_s: finish,
            measured_throughput_kbps: throughput,
            buffer_after_s: buffer_after,
            active_path: controller.active_path(),
            zone: decision.zone,
            rerouted: decision.reroute_requested,
            stall_s: stall,
        });

        client.buffer_s = buffer_after;
        client.version_index = version;
        client.last_throughput_kbps = throughput;
        client.last_segment_bitrate_kbps = actual_bitrate;
        client.segments_downloaded = seg + 1;
        client.smoothed_throughput_kbps =
            update_smoothed_throughput(client.smoothed_throughput_kbps, throughput, gamma, seg + 1);
        sara_history.push(size, download_time);
        now = finish;
    }

    Ok(SessionLog {
        records,
        total_stall_s: total_stall,
        wall_end_s: now,
        truncated: false,
        segment_duration_s: duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_synthetic_catalog, Version};
    use crate::controller::PolicyKind;
    use crate::netmodel::{BandwidthTrace, Path};

    const LADDER: [f64; 12] = [
        354.0, 472.0, 638.0, 882.0, 1234.0, 1779.0, 2588.0, 3823.0, 5613.0, 8028.0, 11156.0,
        15227.0,
    ];

    fn flat_catalog(averages: &[f64], segments: usize) -> VideoCatalog {
        generate_synthetic_catalog(1, segments, 2.0, averages, 0.0).unwrap()
    }

    fn single_path_topology(trace: BandwidthTrace) -> Topology {
        Topology::new(
            vec!["s1".into(), "s2".into(), "s3".into()],
            "s2".into(),
            "s1".into(),
            vec![Path {
                id: 0,
                hops: vec!["s2".into(), "s3".into(), "s1".into()],
                trace,
            }],
        )
        .unwrap()
    }

    fn two_path_topology(a: BandwidthTrace, b: BandwidthTrace) -> Topology {
        Topology::new(
            vec!["s1".into(), "s2".into(), "s3".into(), "s4".into()],
            "s2".into(),
            "s1".into(),
            vec![
                Path {
                    id: 0,
                    hops: vec!["s2".into(), "s3".into(), "s1".into()],
                    trace: a,
                },
                Path {
                    id: 1,
                    hops: vec!["s2".into(), "s4".into(), "s3".into(), "s1".into()],
                    trace: b,
                },
            ],
        )
        .unwrap()
    }

    fn vasr_fixed<'a>(catalog: &'a VideoCatalog, topology: &'a Topology) -> SessionConfig<'a> {
        SessionConfig {
            catalog,
            topology,
            algorithm: AlgorithmConfig::Vasr(AdaptationParams::default()),
            controller: ControllerParams::fixed(),
            start_version: 0,
        }
    }

    #[test]
    fn buffer_recursion_examples() {
        assert_eq!(buffer_after_download(10.0, 2.0, 2.0), (10.0, 0.0));
        assert_eq!(buffer_after_download(1.0, 4.0, 2.0), (2.0, 3.0));
        assert_eq!(buffer_after_download(0.0, 5.0, 2.0), (2.0, 5.0));
    }

    #[test]
    fn ample_constant_bandwidth_reaches_top_and_holds() {
        let catalog = flat_catalog(&LADDER, 120);
        let topology = single_path_topology(BandwidthTrace::constant(20_000.0, 2000.0));
        let log = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        assert!(!log.truncated);
        assert_eq!(log.records.len(), 120);
        assert_eq!(log.total_stall_s, 0.0);

        let versions: Vec<usize> = log.records.iter().map(|r| r.version).collect();
        // Monotone climb to the top, then steady: zero switch-downs.
        for w in versions.windows(2) {
            assert!(w[1] >= w[0], "switch-down in {w:?}");
        }
        assert_eq!(*versions.last().unwrap(), 11);
        assert_eq!(versions[0], 0);
        // Buffer respects its cap at every request instant.
        for r in &log.records {
            assert!(r.buffer_after_s <= 50.0 + 1e-9);
        }
    }

    #[test]
    fn starved_constant_bandwidth_stays_at_lowest_and_stalls() {
        // 300 kbps below the lowest average of 354: every segment takes
        // 708/300 = 2.36s against a 2s drain, so each segment after the
        // first stalls for exactly 0.36s.
        let catalog = flat_catalog(&LADDER, 40);
        let topology = single_path_topology(BandwidthTrace::constant(300.0, 2000.0));
        let log = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        assert!(!log.truncated);
        let expected_per_seg = 708.0 / 300.0 - 2.0;
        for r in &log.records {
            assert_eq!(r.version, 0);
            if r.seg_index > 0 {
                assert!((r.stall_s - expected_per_seg).abs() < 1e-9);
            }
        }
        assert!((log.total_stall_s - 39.0 * expected_per_seg).abs() < 1e-6);
    }

    #[test]
    fn throughput_field_matches_size_over_elapsed() {
        let catalog = flat_catalog(&LADDER, 60);
        let topology = single_path_topology(
            BandwidthTrace::new(
                vec![(0.0, 9000.0), (40.0, 2500.0), (90.0, 12_000.0)],
                2000.0,
            )
            .unwrap(),
        );
        let log = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        for r in &log.records {
            let expected = r.size_kbits / (r.finish_time_s - r.request_time_s);
            assert!((r.measured_throughput_kbps - expected).abs() / expected < 1e-9);
        }
    }

    #[test]
    fn mid_download_path_change_continues_piecewise() {
        // Round-robin over two paths (alpha = 0, t = 2): path 0 on [0,2),
        // path 1 on [2,4). An 8000-kbit first segment delivers 2000 kbits on
        // path 0 and the remaining 6000 on path 1, finishing exactly at 4s.
        let catalog = flat_catalog(&[4000.0], 1);
        let topology = two_path_topology(
            BandwidthTrace::constant(1000.0, 100.0),
            BandwidthTrace::constant(3000.0, 100.0),
        );
        let config = SessionConfig {
            catalog: &catalog,
            topology: &topology,
            algorithm: AlgorithmConfig::Aggressive { buffer_cap_s: 50.0 },
            controller: ControllerParams {
                policy: PolicyKind::Spr,
                switch_period_s: 2.0,
                steady_multiplier: 0,
                ..ControllerParams::fixed()
            },
            start_version: 0,
        };
        let log = run_session(&config).unwrap();
        assert_eq!(log.records.len(), 1);
        let r = &log.records[0];
        assert!(
            (r.finish_time_s - 4.0).abs() < 1e-9,
            "finish {}",
            r.finish_time_s
        );
        assert_eq!(r.active_path, 1);
    }

    #[test]
    fn start_version_is_honored_and_range_checked() {
        let catalog = flat_catalog(&LADDER, 10);
        let topology = single_path_topology(BandwidthTrace::constant(20_000.0, 500.0));
        let mut config = vasr_fixed(&catalog, &topology);
        config.start_version = 3;
        let log = run_session(&config).unwrap();
        assert_eq!(log.records[0].version, 3);

        config.start_version = 12;
        assert!(run_session(&config).is_err());
    }

    #[test]
    fn horizon_exhaustion_truncates_with_partial_log() {
        let catalog = flat_catalog(&LADDER, 40);
        // Enough for roughly four segments, then the horizon ends.
        let topology = single_path_topology(BandwidthTrace::constant(354.0, 17.0));
        let log = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        assert!(log.truncated);
        assert!(!log.records.is_empty());
        assert!(log.records.len() < 40);
    }

    #[test]
    fn identical_configs_yield_identical_logs() {
        let catalog = generate_synthetic_catalog(9, 80, 2.0, &LADDER, 0.5).unwrap();
        let topology = single_path_topology(
            BandwidthTrace::new(
                vec![(0.0, 7000.0), (60.0, 900.0), (120.0, 16_000.0)],
                2000.0,
            )
            .unwrap(),
        );
        let a = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        let b = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_accounting_identity_holds() {
        // wall_end - first_finish == content played + stalls, and the
        // content played is everything downloaded minus the final buffer.
        let catalog = generate_synthetic_catalog(5, 100, 2.0, &LADDER, 0.5).unwrap();
        for bw in [450.0, 2500.0, 9000.0, 25_000.0] {
            let topology = single_path_topology(BandwidthTrace::constant(bw, 4000.0));
            let log = run_session(&vasr_fixed(&catalog, &topology)).unwrap();
            assert!(!log.truncated);
            let played = log.records.len() as f64 * log.segment_duration_s
                - log.records.last().unwrap().buffer_after_s;
            let lhs = log.wall_end_s - log.playback_start_s();
            assert!(
                (lhs - (played + log.total_stall_s)).abs() < 1e-6,
                "identity off at bw {bw}: {lhs} vs {}",
                played + log.total_stall_s
            );
        }
    }

    #[test]
    fn csv_rendering_is_stable() {
        let catalog = VideoCatalog::new(
            2.0,
            vec![Version {
                index: 0,
                qp: 0,
                avg_bitrate_kbps: 1000.0,
                segment_bitrates_kbps: vec![1000.0; 3],
            }],
        )
        .unwrap();
        let topology = single_path_topology(BandwidthTrace::constant(1000.0, 100.0));
        let config = SessionConfig {
            catalog: &catalog,
            topology: &topology,
            algorithm: AlgorithmConfig::Aggressive { buffer_cap_s: 50.0 },
            controller: ControllerParams::fixed(),
            start_version: 0,
        };
        let log = run_session(&config).unwrap();
        let csv = log.to_csv_string();
        let expected = "\
seg_index,version,actual_bitrate_kbps,size_kbits,request_time_s,finish_time_s,\
measured_throughput_kbps,buffer_after_s,path_id,zone,rerouted,stall_s
0,0,1000.000000,2000.000000,0.000000,2.000000,1000.000000,2.000000,0,stable,false,0.000000
1,0,1000.000000,2000.000000,2.000000,4.000000,1000.000000,2.000000,0,stable,false,0.000000
2,0,1000.000000,2000.000000,4.000000,6.000000,1000.000000,2.000000,0,stable,false,0.000000
";
        assert_eq!(csv, expected);
    }
}
