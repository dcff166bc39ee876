//! Client-side bitrate adaptation: the buffer/throughput-zoned adapter with
//! reroute assistance (VASR), plus the Aggressive and SARA baselines.
//!
//! Every decision function is pure: same inputs, same decision. The engine
//! owns all state and clocks.

use serde::{Deserialize, Serialize};

use crate::catalog::VideoCatalog;
use crate::{Error, Result};

/// Buffer thresholds and tuning knobs of the VASR adapter.
///
/// Fields omitted from a config file fall back to the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptationParams {
    pub b_low_s: f64,
    pub b_high_s: f64,
    pub b_max_s: f64,
    /// Deviation dead-band: only deviations beyond this magnitude trigger
    /// version switches in the switch-up / switch-down zones.
    pub delta0: f64,
    /// EWMA weight on the newest throughput sample, in [0, 1].
    pub gamma: f64,
    /// Safety margin applied to the smoothed throughput, in [0, 1).
    pub mu: f64,
}

impl Default for AdaptationParams {
    fn default() -> Self {
        AdaptationParams {
            b_low_s: 15.0,
            b_high_s: 25.0,
            b_max_s: 50.0,
            delta0: 0.5,
            gamma: 0.7,
            mu: 0.1,
        }
    }
}

impl AdaptationParams {
    pub fn validate(&self) -> Result<()> {
        let thresholds_ok =
            0.0 < self.b_low_s && self.b_low_s < self.b_high_s && self.b_high_s < self.b_max_s;
        if !thresholds_ok {
            return Err(Error::Invalid(format!(
                "buffer thresholds must satisfy 0 < b_low_s < b_high_s < b_max_s, \
                 got {} / {} / {}",
                self.b_low_s, self.b_high_s, self.b_max_s
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Invalid(format!(
                "gamma must be in [0, 1], got {}",
                self.gamma
            )));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return Err(Error::Invalid(format!(
                "mu must be in [0, 1), got {}",
                self.mu
            )));
        }
        if !self.delta0.is_finite() || self.delta0 <= 0.0 {
            return Err(Error::Invalid(format!(
                "delta0 must be positive, got {}",
                self.delta0
            )));
        }
        Ok(())
    }
}

/// Per-session client state as seen by the decision functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClientState {
    pub buffer_s: f64,
    /// Version of the most recently downloaded segment.
    pub version_index: usize,
    pub smoothed_throughput_kbps: f64,
    /// Throughput measured for the last completed segment.
    pub last_throughput_kbps: f64,
    /// Actual encoded bitrate of the last completed segment.
    pub last_segment_bitrate_kbps: f64,
    pub segments_downloaded: usize,
}

/// Which buffer zone produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    SwitchUp,
    Stable,
    SwitchDown,
    AssistedSwitchDown,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::SwitchUp => "switch_up",
            Zone::Stable => "stable",
            Zone::SwitchDown => "switch_down",
            Zone::AssistedSwitchDown => "assisted_switch_down",
        }
    }
}

/// Outcome of one adaptation step: the next version to request and whether
/// the client asks the controller for a new route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub next_version: usize,
    pub reroute_requested: bool,
    pub zone: Zone,
}

/// Relative headroom between measured throughput and the bitrate it carried.
/// Positive means the network can deliver higher quality.
pub fn deviation(throughput_kbps: f64, segment_bitrate_kbps: f64) -> f64 {
    debug_assert!(segment_bitrate_kbps > 0.0);
    (throughput_kbps - segment_bitrate_kbps) / segment_bitrate_kbps
}

/// EWMA throughput estimate. The first sample seeds the estimate directly.
pub fn update_smoothed_throughput(
    prev_kbps: f64,
    measured_kbps: f64,
    gamma: f64,
    segment_count: usize,
) -> f64 {
    debug_assert!(segment_count >= 1);
    if segment_count == 1 {
        measured_kbps
    } else {
        (1.0 - gamma) * prev_kbps + gamma * measured_kbps
    }
}

/// Highest version whose average bitrate is strictly below
/// `(1 - mu) * smoothed_throughput`, clamped to version 0 when none
/// qualifies. Returns the version index and its average bitrate.
pub fn optimal_version(
    catalog: &VideoCatalog,
    smoothed_throughput_kbps: f64,
    mu: f64,
) -> (usize, f64) {
    let ceiling = (1.0 - mu) * smoothed_throughput_kbps;
    let idx = catalog
        .versions
        .iter()
        .rev()
        .find(|v| v.avg_bitrate_kbps < ceiling)
        .map(|v| v.index)
        .unwrap_or(0);
    (idx, catalog.versions[idx].avg_bitrate_kbps)
}

/// Logistic-weighted buffer threshold between `b_low_s` and `b_high_s`:
/// large positive deviations pull it toward `b_low_s`, large negative ones
/// toward `b_high_s`. Strictly decreasing in `delta`.
pub fn adaptive_threshold(delta: f64, b_low_s: f64, b_high_s: f64) -> f64 {
    debug_assert!(b_low_s < b_high_s);
    let sigma = 1.0 / (1.0 + (-delta).exp());
    b_high_s - sigma * (b_high_s - b_low_s)
}

/// One VASR step over the four buffer zones.
///
/// Only the assisted switch-down zone (buffer below `b_low_s`) requests a
/// reroute; there the version is set straight to the optimal one for the
/// smoothed throughput, which may land above the current version.
pub fn vasr_decide(
    state: &ClientState,
    catalog: &VideoCatalog,
    params: &AdaptationParams,
) -> Decision {
    let delta = deviation(state.last_throughput_kbps, state.last_segment_bitrate_kbps);
    let (opt_idx, r_opt) = optimal_version(catalog, state.smoothed_throughput_kbps, params.mu);
    let current = state.version_index;
    let current_avg = catalog.versions[current].avg_bitrate_kbps;
    let top = catalog.top_version();

    if state.buffer_s >= params.b_high_s {
        let up = delta > params.delta0 && current_avg < r_opt;
        Decision {
            next_version: if up { (current + 1).min(top) } else { current },
            reroute_requested: false,
            zone: Zone::SwitchUp,
        }
    } else {
        let b_th = adaptive_threshold(delta, params.b_low_s, params.b_high_s);
        if state.buffer_s >= b_th {
            Decision {
                next_version: current,
                reroute_requested: false,
                zone: Zone::Stable,
            }
        } else if state.buffer_s >= params.b_low_s {
            let down = delta < -params.delta0
                && (current_avg > r_opt || state.last_segment_bitrate_kbps > current_avg);
            Decision {
                next_version: if down {
                    current.saturating_sub(1)
                } else {
                    current
                },
                reroute_requested: false,
                zone: Zone::SwitchDown,
            }
        } else {
            Decision {
                next_version: opt_idx,
                reroute_requested: true,
                zone: Zone::AssistedSwitchDown,
            }
        }
    }
}

fn zone_for_delta(current: usize, next: usize) -> Zone {
    use std::cmp::Ordering;
    match next.cmp(&current) {
        Ordering::Greater => Zone::SwitchUp,
        Ordering::Equal => Zone::Stable,
        Ordering::Less => Zone::SwitchDown,
    }
}

/// Instant-throughput baseline: highest version whose average bitrate does
/// not exceed the last measured throughput. No smoothing, no margin, never
/// asks for a reroute.
pub fn aggressive_decide(state: &ClientState, catalog: &VideoCatalog) -> Decision {
    let next = catalog
        .versions
        .iter()
        .rev()
        .find(|v| v.avg_bitrate_kbps <= state.last_throughput_kbps)
        .map(|v| v.index)
        .unwrap_or(0);
    Decision {
        next_version: next,
        reroute_requested: false,
        zone: zone_for_delta(state.version_index, next),
    }
}

/// Tuning knobs of the segment-aware baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaraParams {
    /// Fast-start threshold: below this buffer level the lowest version is
    /// requested unconditionally.
    pub fast_start_s: f64,
    pub b_alpha_s: f64,
    pub b_beta_s: f64,
    pub b_max_s: f64,
}

impl Default for SaraParams {
    fn default() -> Self {
        SaraParams {
            fast_start_s: 10.0,
            b_alpha_s: 15.0,
            b_beta_s: 25.0,
            b_max_s: 50.0,
        }
    }
}

impl SaraParams {
    pub fn validate(&self) -> Result<()> {
        let thresholds_ok = 0.0 < self.fast_start_s
            && self.fast_start_s < self.b_alpha_s
            && self.b_alpha_s < self.b_beta_s
            && self.b_beta_s <= self.b_max_s;
        if !thresholds_ok {
            return Err(Error::Invalid(format!(
                "sara thresholds must satisfy 0 < fast_start_s < b_alpha_s < \
                 b_beta_s <= b_max_s, got {} / {} / {} / {}",
                self.fast_start_s, self.b_alpha_s, self.b_beta_s, self.b_max_s
            )));
        }
        Ok(())
    }
}

/// Download history backing SARA's segment-size-weighted harmonic-mean
/// throughput estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SaraHistory {
    total_kbits: f64,
    total_seconds: f64,
}

impl SaraHistory {
    pub fn push(&mut self, size_kbits: f64, download_time_s: f64) {
        self.total_kbits += size_kbits;
        self.total_seconds += download_time_s;
    }

    pub fn is_empty(&self) -> bool {
        self.total_seconds == 0.0
    }

    /// Size-weighted harmonic mean of the per-segment throughputs.
    pub fn harmonic_mean_kbps(&self) -> Option<f64> {
        if self.is_empty() {
            None
        } else {
            Some(self.total_kbits / self.total_seconds)
        }
    }
}

/// One SARA step: four buffer ranges keyed on the fast-start threshold,
/// `b_alpha_s` and `b_beta_s`, with download times predicted from the next
/// segment's actual size and the harmonic-mean throughput. The engine delays
/// the next request while the buffer sits above `b_beta_s`.
pub fn sara_decide(
    state: &ClientState,
    history: &SaraHistory,
    catalog: &VideoCatalog,
    params: &SaraParams,
) -> Decision {
    let current = state.version_index;
    let next_seg = state.segments_downloaded;
    let mean = match history.harmonic_mean_kbps() {
        Some(m) if state.buffer_s >= params.fast_start_s => m,
        // Fast start: empty history or a thin buffer both force the lowest
        // version.
        _ => {
            return Decision {
                next_version: 0,
                reroute_requested: false,
                zone: zone_for_delta(current, 0),
            }
        }
    };
    let predicted = |version: usize| -> f64 {
        let size = catalog
            .segment_size_kbits(version, next_seg)
            .expect("engine only asks about in-range segments");
        size / mean
    };
    let slack = state.buffer_s - params.fast_start_s;

    let next = if state.buffer_s < params.b_alpha_s {
        // Additive increase: step up one level only when the candidate's
        // next segment is predicted to fit in the slack.
        let candidate = (current + 1).min(catalog.top_version());
        if candidate != current && predicted(candidate) <= slack {
            candidate
        } else {
            current
        }
    } else {
        // At and above b_alpha_s: jump straight to the highest version whose
        // predicted download time fits in the slack.
        catalog
            .versions
            .iter()
            .rev()
            .find(|v| predicted(v.index) <= slack)
            .map(|v| v.index)
            .unwrap_or(0)
    };
    Decision {
        next_version: next,
        reroute_requested: false,
        zone: zone_for_delta(current, next),
    }
}
