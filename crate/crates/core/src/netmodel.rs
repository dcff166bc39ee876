//! Network model: candidate server-to-client paths with piecewise-constant
//! bandwidth over time, and an exact fluid transfer solver.
//!
//! Links are fluid rate limits. A path's deliverable rate at any instant
//! equals its trace value; there is no cross traffic, queuing or loss.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Piecewise-constant bandwidth over `[0, horizon_s)`, left-closed
/// right-open steps.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthTrace {
    /// (start_time_s, bandwidth_kbps) breakpoints, first at t = 0,
    /// times strictly increasing.
    samples: Vec<(f64, f64)>,
    horizon_s: f64,
}

impl BandwidthTrace {
    pub fn new(samples: Vec<(f64, f64)>, horizon_s: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("bandwidth trace"));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::Invalid(format!(
                "trace must start at t=0, first breakpoint is at {}s",
                samples[0].0
            )));
        }
        for w in samples.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Invalid(format!(
                    "trace breakpoint times must be strictly increasing \
                     ({}s then {}s)",
                    w[0].0, w[1].0
                )));
            }
        }
        for &(t, bw) in &samples {
            if bw < 0.0 || !bw.is_finite() || !t.is_finite() {
                return Err(Error::Invalid(format!(
                    "trace breakpoint ({t}s, {bw} kbps) is not a finite \
                     non-negative sample"
                )));
            }
        }
        if !horizon_s.is_finite() || horizon_s <= samples.last().unwrap().0 {
            return Err(Error::Invalid(format!(
                "horizon {horizon_s}s does not cover the last breakpoint at {}s",
                samples.last().unwrap().0
            )));
        }
        Ok(BandwidthTrace { samples, horizon_s })
    }

    /// Constant-rate trace, mostly for tests and synthetic scenarios.
    pub fn constant(bandwidth_kbps: f64, horizon_s: f64) -> Self {
        BandwidthTrace::new(vec![(0.0, bandwidth_kbps)], horizon_s)
            .expect("constant trace is always valid")
    }

    /// Reads a `time_s,bandwidth_kbps` CSV.
    pub fn from_csv_path(path: &FsPath, horizon_s: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut samples = Vec::new();
        for row in reader.deserialize::<(f64, f64)>() {
            samples.push(row?);
        }
        BandwidthTrace::new(samples, horizon_s)
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon_s
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    fn check_time(&self, time_s: f64) -> Result<()> {
        if time_s < 0.0 || time_s > self.horizon_s {
            return Err(Error::BeyondHorizon {
                time_s,
                horizon_s: self.horizon_s,
            });
        }
        Ok(())
    }

    /// Index of the step containing `time_s` (left-closed, right-open).
    fn step_index(&self, time_s: f64) -> usize {
        self.samples.partition_point(|&(t, _)| t <= time_s) - 1
    }

    /// Bandwidth of the step containing `time_s`.
    pub fn bandwidth_at(&self, time_s: f64) -> Result<f64> {
        self.check_time(time_s)?;
        Ok(self.samples[self.step_index(time_s)].1)
    }

    /// Exact integral of the step function over `[t0, t1)`, in kilobits.
    pub fn integral_kbits(&self, t0: f64, t1: f64) -> Result<f64> {
        if !t0.is_finite() || !t1.is_finite() || t0 >= t1 {
            return Err(Error::Invalid(format!(
                "degenerate integration window [{t0}, {t1})"
            )));
        }
        self.check_time(t0)?;
        self.check_time(t1)?;
        let mut total = 0.0;
        let mut cur = t0;
        let mut idx = self.step_index(t0);
        while cur < t1 {
            let step_end = self
                .samples
                .get(idx + 1)
                .map_or(self.horizon_s, |&(t, _)| t);
            let end = step_end.min(t1);
            total += self.samples[idx].1 * (end - cur);
            cur = end;
            idx += 1;
        }
        Ok(total)
    }

    /// Time-weighted mean bandwidth over `[t0, t1)`.
    pub fn average_bandwidth(&self, t0: f64, t1: f64) -> Result<f64> {
        Ok(self.integral_kbits(t0, t1)? / (t1 - t0))
    }

    /// Smallest `t` such that the integral of bandwidth over `[start_s, t]`
    /// equals `size_kbits`. Exact analytic piecewise solution.
    pub fn transfer_finish_time(&self, start_s: f64, size_kbits: f64) -> Result<f64> {
        if !size_kbits.is_finite() || size_kbits <= 0.0 {
            return Err(Error::Invalid(format!(
                "transfer size must be positive, got {size_kbits} kbits"
            )));
        }
        self.check_time(start_s)?;
        let mut remaining = size_kbits;
        let mut cur = start_s;
        let mut idx = self.step_index(start_s);
        while idx < self.samples.len() {
            let rate = self.samples[idx].1;
            let step_end = self
                .samples
                .get(idx + 1)
                .map_or(self.horizon_s, |&(t, _)| t);
            if rate > 0.0 {
                let capacity = rate * (step_end - cur);
                if remaining <= capacity {
                    return Ok(cur + remaining / rate);
                }
                remaining -= capacity;
            }
            cur = step_end;
            idx += 1;
        }
        Err(Error::HorizonExhausted {
            start_s,
            remaining_kbits: remaining,
            horizon_s: self.horizon_s,
        })
    }
}

/// One candidate route between the server and the client.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub id: usize,
    pub hops: Vec<String>,
    pub trace: BandwidthTrace,
}

impl Path {
    /// Hop count used for min-hop path selection.
    pub fn num_hops(&self) -> usize {
        self.hops.len()
    }
}

/// The switch fabric between server and client, reduced to its candidate
/// paths. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub switch_ids: Vec<String>,
    pub server_attachment: String,
    pub client_attachment: String,
    paths: Vec<Path>,
}

impl Topology {
    pub fn new(
        switch_ids: Vec<String>,
        server_attachment: String,
        client_attachment: String,
        paths: Vec<Path>,
    ) -> Result<Self> {
        let topo = Topology {
            switch_ids,
            server_attachment,
            client_attachment,
            paths,
        };
        topo.validate()?;
        Ok(topo)
    }

    fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::Invalid("topology has no paths".into()));
        }
        let mut horizon = None;
        for (i, p) in self.paths.iter().enumerate() {
            if p.id != i {
                return Err(Error::Invalid(format!(
                    "path at position {i} declares id {}",
                    p.id
                )));
            }
            if p.hops.is_empty() {
                return Err(Error::Invalid(format!("path {i} has no hops")));
            }
            if p.hops.first() != Some(&self.server_attachment) {
                return Err(Error::Invalid(format!(
                    "path {i} does not start at the server switch {}",
                    self.server_attachment
                )));
            }
            if p.hops.last() != Some(&self.client_attachment) {
                return Err(Error::Invalid(format!(
                    "path {i} does not end at the client switch {}",
                    self.client_attachment
                )));
            }
            for hop in &p.hops {
                if !self.switch_ids.contains(hop) {
                    return Err(Error::Invalid(format!(
                        "path {i} references unknown switch {hop}"
                    )));
                }
            }
            match horizon {
                None => horizon = Some(p.trace.horizon_s()),
                Some(h) if h != p.trace.horizon_s() => {
                    return Err(Error::Invalid(format!(
                        "path {i} horizon {}s differs from {h}s",
                        p.trace.horizon_s()
                    )));
                }
                _ => {}
            }
        }
        for i in 0..self.paths.len() {
            for j in (i + 1)..self.paths.len() {
                if self.paths[i].hops == self.paths[j].hops {
                    return Err(Error::Invalid(format!(
                        "paths {i} and {j} are identical switch sequences"
                    )));
                }
            }
        }
        // Declaration order is the path id order; the first declared path
        // must be a minimum-hop path so that best-effort routing is path 0.
        let min_hops = self.paths.iter().map(Path::num_hops).min().unwrap();
        if self.paths[0].num_hops() != min_hops {
            return Err(Error::Invalid(format!(
                "path 0 has {} hops but the minimum over all paths is \
                 {min_hops}; declare a minimum-hop path first",
                self.paths[0].num_hops()
            )));
        }
        Ok(())
    }

    /// Candidate paths in declaration order; index 0 is a minimum-hop path.
    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn horizon_s(&self) -> f64 {
        self.paths[0].trace.horizon_s()
    }

    /// Loads a scenario file and the per-path trace CSVs it references
    /// (relative to the scenario file's directory).
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: ScenarioFile = serde_json::from_str(&text)?;
        let base = path.parent().map(PathBuf::from).unwrap_or_default();
        let paths = file
            .paths
            .into_iter()
            .enumerate()
            .map(|(id, p)| {
                let trace = BandwidthTrace::from_csv_path(&base.join(&p.trace), file.horizon_s)?;
                Ok(Path {
                    id,
                    hops: p.hops,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Topology::new(
            file.switches,
            file.server_attachment,
            file.client_attachment,
            paths,
        )
    }
}

/// On-disk scenario description: switches, attachments, horizon and the
/// per-path trace file references.
#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    switches: Vec<String>,
    server_attachment: String,
    client_attachment: String,
    horizon_s: f64,
    paths: Vec<ScenarioPath>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioPath {
    hops: Vec<String>,
    trace: String,
}
