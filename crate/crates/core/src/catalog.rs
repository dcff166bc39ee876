//! Video catalog: the version ladder of the content under stream, with
//! per-segment VBR bitrates and per-version averages.
//!
//! A catalog is immutable after load and safe to share across sessions.

use std::fs;
use std::path::Path as FsPath;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance between a version's declared average bitrate and the
/// computed mean of its per-segment bitrates. Loose enough to permit rounding
/// in hand-authored catalogs, tight enough to catch data errors.
pub const AVG_BITRATE_TOLERANCE: f64 = 0.01;

/// One encoding of the video at a fixed quality level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Version {
    /// Position on the ladder; 0 is the lowest quality.
    pub index: usize,
    /// Encoder quantization parameter. Metadata only, never enters a computation.
    pub qp: i32,
    pub avg_bitrate_kbps: f64,
    pub segment_bitrates_kbps: Vec<f64>,
}

/// The full version ladder plus the segment duration shared by all versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoCatalog {
    pub segment_duration_s: f64,
    pub versions: Vec<Version>,
}

impl VideoCatalog {
    /// Builds a catalog and validates every invariant.
    pub fn new(segment_duration_s: f64, versions: Vec<Version>) -> Result<Self> {
        let catalog = VideoCatalog {
            segment_duration_s,
            versions,
        };
        catalog.validate()?;
        Ok(catalog)
    }

    /// Loads and validates a catalog from a JSON file.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Parses and validates a catalog from JSON text.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let catalog: VideoCatalog = serde_json::from_str(text)?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serialization cannot fail")
    }

    pub fn num_versions(&self) -> usize {
        self.versions.len()
    }

    /// Highest version index on the ladder.
    pub fn top_version(&self) -> usize {
        self.versions.len() - 1
    }

    pub fn num_segments(&self) -> usize {
        self.versions[0].segment_bitrates_kbps.len()
    }

    /// Size of one segment in kilobits: per-segment bitrate times duration.
    pub fn segment_size_kbits(&self, version: usize, seg: usize) -> Result<f64> {
        let v = self.versions.get(version).ok_or_else(|| {
            Error::OutOfRange(format!(
                "version {version} (catalog has {})",
                self.versions.len()
            ))
        })?;
        let bitrate = v.segment_bitrates_kbps.get(seg).ok_or_else(|| {
            Error::OutOfRange(format!(
                "segment {seg} of version {version} (catalog has {})",
                v.segment_bitrates_kbps.len()
            ))
        })?;
        Ok(bitrate * self.segment_duration_s)
    }

    fn validate(&self) -> Result<()> {
        if self.segment_duration_s <= 0.0 || !self.segment_duration_s.is_finite() {
            return Err(Error::Invalid(format!(
                "segment_duration_s must be positive, got {}",
                self.segment_duration_s
            )));
        }
        if self.versions.is_empty() {
            return Err(Error::Invalid("catalog has no versions".into()));
        }
        let num_segments = self.versions[0].segment_bitrates_kbps.len();
        if num_segments == 0 {
            return Err(Error::Invalid("version 0 has no segments".into()));
        }
        let mut prev_avg = 0.0;
        for (i, v) in self.versions.iter().enumerate() {
            if v.index != i {
                return Err(Error::Invalid(format!(
                    "version at position {i} declares index {}",
                    v.index
                )));
            }
            if v.segment_bitrates_kbps.len() != num_segments {
                return Err(Error::Invalid(format!(
                    "version {i} has {} segment bitrates, expected {num_segments}",
                    v.segment_bitrates_kbps.len()
                )));
            }
            if !v.avg_bitrate_kbps.is_finite() || v.avg_bitrate_kbps <= prev_avg {
                return Err(Error::Invalid(format!(
                    "version {i} average bitrate {} kbps is not strictly above \
                     its predecessor ({prev_avg} kbps)",
                    v.avg_bitrate_kbps
                )));
            }
            prev_avg = v.avg_bitrate_kbps;
            for (j, &b) in v.segment_bitrates_kbps.iter().enumerate() {
                if !b.is_finite() || b <= 0.0 {
                    return Err(Error::Invalid(format!(
                        "version {i} segment {j} bitrate {b} kbps is not positive"
                    )));
                }
            }
            let mean =
                v.segment_bitrates_kbps.iter().sum::<f64>() / v.segment_bitrates_kbps.len() as f64;
            let rel = (mean - v.avg_bitrate_kbps).abs() / v.avg_bitrate_kbps;
            if rel > AVG_BITRATE_TOLERANCE {
                return Err(Error::Invalid(format!(
                    "version {i}: declared average {} kbps differs from computed \
                     mean {mean:.3} kbps by {:.2}% (tolerance {}%)",
                    v.avg_bitrate_kbps,
                    rel * 100.0,
                    AVG_BITRATE_TOLERANCE * 100.0
                )));
            }
        }
        Ok(())
    }
}

/// Generates a deterministic catalog whose per-segment bitrates fluctuate
/// within `±vbr_swing` of each version's declared average while the mean of
/// every version stays on its average.
///
/// Swing factors are drawn as antithetic pairs (1+u, 1-u) and shuffled, so
/// the per-version mean is exact up to floating-point rounding.
pub fn generate_synthetic_catalog(
    seed: u64,
    num_segments: usize,
    segment_duration_s: f64,
    avg_bitrates_kbps: &[f64],
    vbr_swing: f64,
) -> Result<VideoCatalog> {
    if !(0.0..1.0).contains(&vbr_swing) {
        return Err(Error::Invalid(format!(
            "vbr_swing must be in [0, 1), got {vbr_swing}"
        )));
    }
    if avg_bitrates_kbps.is_empty() {
        return Err(Error::Invalid("avg_bitrates_kbps is empty".into()));
    }
    for w in avg_bitrates_kbps.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Invalid(format!(
                "avg_bitrates_kbps must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let versions = avg_bitrates_kbps
        .iter()
        .enumerate()
        .map(|(index, &avg)| {
            let mut factors = Vec::with_capacity(num_segments);
            while factors.len() + 1 < num_segments {
                let u: f64 = rng.gen::<f64>() * vbr_swing;
                factors.push(1.0 + u);
                factors.push(1.0 - u);
            }
            if factors.len() < num_segments {
                factors.push(1.0);
            }
            factors.shuffle(&mut rng);
            Version {
                index,
                qp: 0,
                avg_bitrate_kbps: avg,
                segment_bitrates_kbps: factors.iter().map(|f| avg * f).collect(),
            }
        })
        .collect();
    VideoCatalog::new(segment_duration_s, versions)
}
