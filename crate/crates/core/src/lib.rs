//! Deterministic fluid-flow simulator of HTTP adaptive VBR video streaming
//! over a multi-path network with a programmable routing controller.
//!
//! The crate models a single client streaming a segmented VBR video: a
//! [`catalog`] describes the version ladder, a [`netmodel`] topology carries
//! the candidate paths and their time-varying bandwidth, an [`adaptation`]
//! algorithm picks the next segment's version, a [`controller`] policy picks
//! the active path, the [`engine`] ties them together into a per-segment
//! session log, and [`metrics`] reduces logs to summary statistics.

pub mod adaptation;
pub mod catalog;
pub mod controller;
pub mod engine;
mod error;
pub mod metrics;
pub mod netmodel;

pub use adaptation::{AdaptationParams, ClientState, Decision, SaraParams, Zone};
pub use catalog::{generate_synthetic_catalog, Version, VideoCatalog};
pub use controller::{Controller, ControllerParams, ControllerState, PolicyKind};
pub use engine::{run_session, AlgorithmConfig, SegmentRecord, SessionConfig, SessionLog};
pub use error::{Error, Result};
pub use metrics::{cdf, summarize, CdfSeries, MetricsReport};
pub use netmodel::{BandwidthTrace, Path, Topology};
