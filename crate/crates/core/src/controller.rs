//! Routing control: the policy object the engine consults for the active
//! path. Four policies are modeled: a fixed minimum-hop path, periodical
//! probing (SPR), request-triggered adaptive routing (SAR) and adaptive
//! routing with bandwidth monitoring (SARM).
//!
//! Probing is carried by the video traffic itself: while a path is being
//! probed it is also the active path, and its measurement is the
//! time-weighted average of its trace over the probe window.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::netmodel::Topology;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Fixed,
    Spr,
    Sar,
    Sarm,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Fixed => "fixed",
            PolicyKind::Spr => "spr",
            PolicyKind::Sar => "sar",
            PolicyKind::Sarm => "sarm",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub policy: PolicyKind,
    /// Probe window length t: each path is active for this long during a
    /// switching stage.
    pub switch_period_s: f64,
    /// Steady-stage multiplier alpha: SPR holds the best path for
    /// `alpha * switch_period_s` before the next cycle.
    pub steady_multiplier: u32,
    /// SARM only: reroute when the active path's measured bandwidth drops
    /// strictly below this threshold.
    pub monitor_threshold_kbps: f64,
    /// SARM only: spacing of the monitor measurements.
    pub monitor_interval_s: f64,
}

impl ControllerParams {
    pub fn fixed() -> Self {
        ControllerParams {
            policy: PolicyKind::Fixed,
            switch_period_s: 2.0,
            steady_multiplier: 1,
            monitor_threshold_kbps: 1000.0,
            monitor_interval_s: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let period_ok = self.switch_period_s.is_finite() && self.switch_period_s > 0.0;
        if self.policy != PolicyKind::Fixed && !period_ok {
            return Err(Error::Invalid(format!(
                "switch_period_s must be positive, got {}",
                self.switch_period_s
            )));
        }
        if self.policy == PolicyKind::Sarm {
            if !self.monitor_threshold_kbps.is_finite() || self.monitor_threshold_kbps <= 0.0 {
                return Err(Error::Invalid(format!(
                    "monitor_threshold_kbps must be positive, got {}",
                    self.monitor_threshold_kbps
                )));
            }
            if !self.monitor_interval_s.is_finite() || self.monitor_interval_s <= 0.0 {
                return Err(Error::Invalid(format!(
                    "monitor_interval_s must be positive, got {}",
                    self.monitor_interval_s
                )));
            }
        }
        Ok(())
    }
}

/// Stage of the routing state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Cycling through all paths, one probe window each.
    Switching,
    /// SPR only: holding the measured best path until the cycle restarts.
    Steady,
    /// Holding a path with nothing scheduled (fixed, SAR/SARM hold).
    Idle,
}

/// Mutable routing state owned by one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub active_path: usize,
    pub phase: Phase,
    /// Path currently being probed; cycles 0..n-1 once per switching stage.
    pub probe_index: usize,
    /// Absolute time at which the current phase ends.
    pub phase_deadline_s: f64,
    /// Bandwidth measured per path during the current switching stage.
    pub measurements: BTreeMap<usize, f64>,
}

/// Path with the highest measured bandwidth; ties break to the lowest id.
pub fn select_best_path(measurements: &BTreeMap<usize, f64>) -> Result<usize> {
    measurements
        .iter()
        .max_by(|a, b| {
            a.1.partial_cmp(b.1)
                .expect("bandwidth measurements are never NaN")
                .then(b.0.cmp(a.0))
        })
        .map(|(&id, _)| id)
        .ok_or(Error::Empty("path measurement set"))
}

/// Length of one full probe-all-then-hold procedure: `(n + alpha) * t`.
pub fn spr_cycle_length(num_paths: usize, steady_multiplier: u32, switch_period_s: f64) -> f64 {
    (num_paths as u32 + steady_multiplier) as f64 * switch_period_s
}

/// Best-effort path in a non-routed network: minimum hop count, ties by
/// declaration order. Topology validation pins this to path 0.
pub fn fixed_path(topology: &Topology) -> usize {
    topology
        .paths()
        .iter()
        .min_by_key(|p| p.num_hops())
        .map(|p| p.id)
        .expect("topology always has at least one path")
}

/// The routing brain consulted by the engine. All transitions happen at
/// deterministic instants: probe-window ends, steady-stage ends and monitor
/// grid points. The engine advances the controller to every such instant.
#[derive(Debug, Clone)]
pub struct Controller<'a> {
    params: ControllerParams,
    topology: &'a Topology,
    state: ControllerState,
    /// Next monitor grid point (SARM only); ticks are skipped while a
    /// switching stage is in progress.
    next_monitor_s: f64,
}

impl<'a> Controller<'a> {
    pub fn new(params: ControllerParams, topology: &'a Topology, start_s: f64) -> Result<Self> {
        params.validate()?;
        let state = match params.policy {
            // SPR probes from the session start.
            PolicyKind::Spr => ControllerState {
                active_path: 0,
                phase: Phase::Switching,
                probe_index: 0,
                phase_deadline_s: start_s + params.switch_period_s,
                measurements: BTreeMap::new(),
            },
            _ => ControllerState {
                active_path: fixed_path(topology),
                phase: Phase::Idle,
                probe_index: 0,
                phase_deadline_s: f64::INFINITY,
                measurements: BTreeMap::new(),
            },
        };
        let next_monitor_s = start_s + params.monitor_interval_s;
        Ok(Controller {
            params,
            topology,
            state,
            next_monitor_s,
        })
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn active_path(&self) -> usize {
        self.state.active_path
    }

    /// Next instant at which the routing state may change, if any.
    pub fn next_event_time(&self) -> Option<f64> {
        match self.state.phase {
            Phase::Switching | Phase::Steady => Some(self.state.phase_deadline_s),
            Phase::Idle if self.params.policy == PolicyKind::Sarm => Some(self.next_monitor_s),
            Phase::Idle => None,
        }
    }

    /// Processes every scheduled transition up to and including `time_s`.
    pub fn advance_to(&mut self, time_s: f64) -> Result<()> {
        while let Some(event) = self.next_event_time() {
            if event > time_s {
                break;
            }
            if self.state.phase == Phase::Idle {
                self.monitor_tick(event)?;
            } else {
                self.phase_end(event)?;
            }
        }
        Ok(())
    }

    /// Client entry point for reroute requests. SAR and SARM start a
    /// switching stage; a request during an ongoing stage is coalesced.
    /// Fixed and SPR ignore the request.
    pub fn on_reroute_request(&mut self, now_s: f64) {
        match self.params.policy {
            PolicyKind::Sar | PolicyKind::Sarm => {
                if self.state.phase == Phase::Idle {
                    self.start_switching_stage(now_s);
                }
            }
            PolicyKind::Fixed | PolicyKind::Spr => {}
        }
    }

    fn start_switching_stage(&mut self, now_s: f64) {
        self.state.measurements.clear();
        self.state.phase = Phase::Switching;
        self.state.probe_index = 0;
        self.state.active_path = 0;
        self.state.phase_deadline_s = now_s + self.params.switch_period_s;
    }

    /// A probe window or steady stage ended at `now_s`.
    fn phase_end(&mut self, now_s: f64) -> Result<()> {
        match self.state.phase {
            Phase::Switching => {
                let window_start = now_s - self.params.switch_period_s;
                let probed = self.state.probe_index;
                let avg = self.topology.paths()[probed]
                    .trace
                    .average_bandwidth(window_start, now_s)?;
                self.state.measurements.insert(probed, avg);
                if probed + 1 < self.topology.num_paths() {
                    self.state.probe_index = probed + 1;
                    self.state.active_path = probed + 1;
                    self.state.phase_deadline_s = now_s + self.params.switch_period_s;
                } else {
                    let best = select_best_path(&self.state.measurements)?;
                    match self.params.policy {
                        PolicyKind::Spr if self.params.steady_multiplier > 0 => {
                            self.state.phase = Phase::Steady;
                            self.state.active_path = best;
                            self.state.phase_deadline_s = now_s
                                + self.params.steady_multiplier as f64
                                    * self.params.switch_period_s;
                        }
                        // Degenerate alpha = 0: the procedure repeats at once.
                        PolicyKind::Spr => self.start_switching_stage(now_s),
                        _ => {
                            // SAR/SARM hold the preferred path until asked
                            // (or monitored) into another stage.
                            self.state.phase = Phase::Idle;
                            self.state.active_path = best;
                            self.state.phase_deadline_s = f64::INFINITY;
                            if self.params.policy == PolicyKind::Sarm {
                                self.next_monitor_s =
                                    next_grid_point(now_s, self.params.monitor_interval_s);
                            }
                        }
                    }
                }
            }
            Phase::Steady => self.start_switching_stage(now_s),
            Phase::Idle => unreachable!("idle phase has no deadline"),
        }
        Ok(())
    }

    /// SARM monitor measurement at a grid point while idle.
    fn monitor_tick(&mut self, now_s: f64) -> Result<()> {
        let window_start = (now_s - self.params.monitor_interval_s).max(0.0);
        self.next_monitor_s = now_s + self.params.monitor_interval_s;
        if window_start >= now_s {
            return Ok(());
        }
        let avg = self.topology.paths()[self.state.active_path]
            .trace
            .average_bandwidth(window_start, now_s)?;
        // Strict less-than: a path meeting the threshold exactly is kept.
        if avg < self.params.monitor_threshold_kbps {
            self.start_switching_stage(now_s);
        }
        Ok(())
    }
}

/// Smallest multiple of `interval` at or after `from` (used to realign the
/// monitor grid after a switching stage).
fn next_grid_point(from: f64, interval: f64) -> f64 {
    let k = (from / interval).ceil();
    let candidate = k * interval;
    if candidate < from {
        candidate + interval
    } else {
        candidate
    }
}
