//! Session statistics: per-run summary metrics and empirical CDF series.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::engine::SessionLog;
use crate::{Error, Result};

/// Summary statistics of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub avg_bitrate_kbps: f64,
    pub avg_version_index: f64,
    pub avg_buffer_s: f64,
    /// Fraction of playback time spent with the buffer below the low
    /// threshold.
    pub frac_buffer_below_low: f64,
    pub num_switch_downs: usize,
    pub largest_switch_down_step: usize,
    pub total_stall_s: f64,
    pub num_stall_events: usize,
}

/// How the buffer statistics aggregate over the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferAveraging {
    /// Integrate the reconstructed buffer trajectory over playback time.
    /// This is the default: the thresholds are phrased over streaming time.
    TimeWeighted,
    /// Average the per-segment snapshots instead; kept for comparison.
    PerSegmentSamples,
}

/// Summarizes a session with time-weighted buffer statistics.
pub fn summarize(log: &SessionLog, b_low_s: f64) -> Result<MetricsReport> {
    summarize_with(log, b_low_s, BufferAveraging::TimeWeighted)
}

pub fn summarize_with(
    log: &SessionLog,
    b_low_s: f64,
    averaging: BufferAveraging,
) -> Result<MetricsReport> {
    if log.records.is_empty() {
        return Err(Error::Empty("session log"));
    }
    let n = log.records.len() as f64;
    let avg_bitrate_kbps = log
        .records
        .iter()
        .map(|r| r.actual_bitrate_kbps)
        .sum::<f64>()
        / n;
    let avg_version_index = log.records.iter().map(|r| r.version as f64).sum::<f64>() / n;

    let mut num_switch_downs = 0usize;
    let mut largest_switch_down_step = 0usize;
    for w in log.records.windows(2) {
        if w[1].version < w[0].version {
            num_switch_downs += 1;
            largest_switch_down_step = largest_switch_down_step.max(w[0].version - w[1].version);
        }
    }

    let (avg_buffer_s, frac_buffer_below_low) = match averaging {
        BufferAveraging::TimeWeighted => buffer_trajectory_stats(log, b_low_s),
        BufferAveraging::PerSegmentSamples => {
            let avg = log.records.iter().map(|r| r.buffer_after_s).sum::<f64>() / n;
            let below = log
                .records
                .iter()
                .filter(|r| r.buffer_after_s < b_low_s)
                .count() as f64;
            (avg, below / n)
        }
    };

    Ok(MetricsReport {
        avg_bitrate_kbps,
        avg_version_index,
        avg_buffer_s,
        frac_buffer_below_low,
        num_switch_downs,
        largest_switch_down_step,
        total_stall_s: log.total_stall_s,
        num_stall_events: log.records.iter().filter(|r| r.stall_s > 0.0).count(),
    })
}

/// Reconstructs the piecewise-linear buffer trajectory over the playback
/// interval and returns its time-weighted mean and the fraction of time
/// spent strictly below `b_low_s`.
///
/// Between two completions the buffer drains at 1 s/s (flooring at zero
/// while a stall is in progress) and jumps by one segment duration at each
/// completion; the recorded `buffer_after_s` values pin the endpoints.
fn buffer_trajectory_stats(log: &SessionLog, b_low_s: f64) -> (f64, f64) {
    let records = &log.records;
    let span = log.wall_end_s - log.playback_start_s();
    if span <= 0.0 {
        let b = records.last().unwrap().buffer_after_s;
        return (b, if b < b_low_s { 1.0 } else { 0.0 });
    }
    let mut integral = 0.0;
    let mut time_below = 0.0;
    for w in records.windows(2) {
        let dt = w[1].finish_time_s - w[0].finish_time_s;
        if dt <= 0.0 {
            continue;
        }
        let b0 = w[0].buffer_after_s;
        // Drains linearly from b0, flooring at zero after b0 seconds; the
        // flat part at zero contributes nothing to the integral but all of
        // its time lies below the threshold.
        let drain = dt.min(b0);
        integral += (b0 + (b0 - drain)) / 2.0 * drain;
        time_below += dt - (b0 - b_low_s).clamp(0.0, dt);
    }
    (integral / span, time_below / span)
}

/// Empirical cumulative distribution: one point per distinct value, with
/// the fraction of samples at or below it. The final fraction is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    pub points: Vec<(f64, f64)>,
}

impl CdfSeries {
    /// Two-column CSV rendering (`value,cum_fraction`).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("value,cum_fraction\n");
        for &(v, f) in &self.points {
            writeln!(out, "{v:.6},{f:.6}").expect("writing to a String cannot fail");
        }
        out
    }
}

pub fn cdf(values: &[f64]) -> Result<CdfSeries> {
    if values.is_empty() {
        return Err(Error::Empty("cdf input"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("cdf inputs are never NaN"));
    let n = sorted.len();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n as f64;
        match points.last_mut() {
            Some(last) if last.0 == v => last.1 = fraction,
            _ => points.push((v, fraction)),
        }
    }
    Ok(CdfSeries { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::Zone;
    use crate::engine::SegmentRecord;

    /// Synthetic log: versions as given, completions every `dt` seconds,
    /// buffer_after constant.
    fn synthetic_log(versions: &[usize], dt: f64, buffer_after: f64) -> SessionLog {
        let records = versions
            .iter()
            .enumerate()
            .map(|(i, &v)| SegmentRecord {
                seg_index: i,
                version: v,
                actual_bitrate_kbps: 100.0 * (v + 1) as f64,
                size_kbits: 200.0 * (v + 1) as f64,
                request_time_s: i as f64 * dt,
                finish_time_s: (i + 1) as f64 * dt,
                measured_throughput_kbps: 1000.0,
                buffer_after_s: buffer_after,
                active_path: 0,
                zone: Zone::Stable,
                rerouted: false,
                stall_s: 0.0,
            })
            .collect::<Vec<_>>();
        let wall_end_s = records.last().unwrap().finish_time_s;
        SessionLog {
            records,
            total_stall_s: 0.0,
            wall_end_s,
            truncated: false,
            segment_duration_s: dt,
        }
    }

    #[test]
    fn switch_down_counting() {
        let log = synthetic_log(&[0, 1, 2, 1, 0], 2.0, 10.0);
        let m = summarize(&log, 15.0).unwrap();
        assert_eq!(m.num_switch_downs, 2);
        assert_eq!(m.largest_switch_down_step, 1);

        let log = synthetic_log(&[9, 0, 0, 1], 2.0, 10.0);
        let m = summarize(&log, 15.0).unwrap();
        assert_eq!(m.largest_switch_down_step, 9);

        let log = synthetic_log(&[4, 4, 4, 4], 2.0, 10.0);
        let m = summarize(&log, 15.0).unwrap();
        assert_eq!(m.num_switch_downs, 0);
        assert_eq!(m.largest_switch_down_step, 0);
    }

    #[test]
    fn monotone_series_has_no_switch_downs() {
        let log = synthetic_log(&[0, 1, 1, 3, 5, 11], 2.0, 10.0);
        assert_eq!(summarize(&log, 15.0).unwrap().num_switch_downs, 0);
    }

    #[test]
    fn sampled_buffer_average_of_constant_snapshots_is_exact() {
        let log = synthetic_log(&[2; 10], 2.0, 10.0);
        let m = summarize_with(&log, 15.0, BufferAveraging::PerSegmentSamples).unwrap();
        assert_eq!(m.avg_buffer_s, 10.0);
        assert_eq!(m.frac_buffer_below_low, 1.0);
    }

    #[test]
    fn time_weighted_buffer_average_follows_the_sawtooth() {
        // Steady state: after each completion the buffer is 10, draining to
        // 8 over the 2s between completions. Average is 9, and with a 15s
        // threshold the whole trajectory sits below it.
        let log = synthetic_log(&[2; 50], 2.0, 10.0);
        let m = summarize(&log, 15.0).unwrap();
        assert!((m.avg_buffer_s - 9.0).abs() < 1e-9);
        assert_eq!(m.frac_buffer_below_low, 1.0);

        // Against a 9s threshold: below for half of each 2s interval.
        let m = summarize(&log, 9.0).unwrap();
        assert!((m.frac_buffer_below_low - 0.5).abs() < 1e-9);
    }

    #[test]
    fn empty_log_is_rejected() {
        let mut log = synthetic_log(&[0], 2.0, 5.0);
        log.records.clear();
        assert!(summarize(&log, 15.0).is_err());
    }

    #[test]
    fn cdf_counts_and_merges_duplicates() {
        let c = cdf(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.points, vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);

        let c = cdf(&[5.0]).unwrap();
        assert_eq!(c.points, vec![(5.0, 1.0)]);

        assert_eq!(
            cdf(&[3.0, 1.0, 2.0]).unwrap(),
            cdf(&[1.0, 2.0, 3.0]).unwrap()
        );
        assert!(cdf(&[]).is_err());
    }

    #[test]
    fn cdf_final_fraction_is_exactly_one() {
        let c = cdf(&[0.3, 9.1, 4.4, 4.4, 0.3, 7.0, 2.2]).unwrap();
        assert_eq!(c.points.last().unwrap().1, 1.0);
        for w in c.points.windows(2) {
            assert!(w[1].0 > w[0].0);
            assert!(w[1].1 > w[0].1);
        }
    }
}
