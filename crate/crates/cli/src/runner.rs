//! The `run` command: executes every configured session and writes the
//! per-run logs, reports, CDF series and the cross-run summary table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hassim_core::metrics::{cdf, summarize, MetricsReport};
use hassim_core::{run_session, SessionConfig, SessionLog, Topology, VideoCatalog};
use serde::Serialize;

use crate::config::{ExperimentConfig, RunSpec};

/// Report written next to each run's segment log. The embedded config echo
/// reproduces the input run spec.
#[derive(Debug, Serialize)]
struct RunReport<'a> {
    run: &'a str,
    config: &'a RunSpec,
    truncated: bool,
    metrics: &'a MetricsReport,
}

pub struct RunOutcome {
    pub name: String,
    pub truncated: bool,
    pub metrics: MetricsReport,
}

pub const MATRIX_SUMMARY_HEADER: &str = "run,avg_bitrate_kbps,avg_version_index,avg_buffer_s,\
frac_buffer_below_low,num_switch_downs,largest_switch_down_step,total_stall_s,num_stall_events";

/// Executes the whole experiment matrix. Returns the per-run outcomes in
/// config order; any truncated run marks the invocation as failed.
pub fn run_matrix(
    config: &ExperimentConfig,
    config_dir: &Path,
    out_dir: &Path,
    parallel: usize,
) -> Result<Vec<RunOutcome>> {
    let catalog = VideoCatalog::load(&config_dir.join(&config.catalog))
        .with_context(|| format!("loading catalog {}", config.catalog.display()))?;
    let topology = Topology::load(&config_dir.join(&config.scenario))
        .with_context(|| format!("loading scenario {}", config.scenario.display()))?;
    fs::create_dir_all(out_dir)?;

    let execute = |run: &RunSpec| -> Result<RunOutcome> {
        let session = SessionConfig {
            catalog: &catalog,
            topology: &topology,
            algorithm: run.algorithm.to_algorithm()?,
            controller: run.policy.to_controller_params()?,
            start_version: run.start_version,
        };
        let log = run_session(&session).with_context(|| format!("run {:?}", run.name))?;
        let metrics = summarize(&log, run.algorithm.low_buffer_threshold_s())
            .with_context(|| format!("run {:?}: metrics", run.name))?;
        write_run_outputs(out_dir, run, &log, &metrics)?;
        Ok(RunOutcome {
            name: run.name.clone(),
            truncated: log.truncated,
            metrics,
        })
    };

    let outcomes: Vec<Result<RunOutcome>> = if parallel > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .context("building worker pool")?;
        pool.install(|| {
            use rayon::prelude::*;
            config.runs.par_iter().map(execute).collect()
        })
    } else {
        config.runs.iter().map(execute).collect()
    };

    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    write_matrix_summary(&out_dir.join("matrix_summary.csv"), &outcomes)?;
    Ok(outcomes)
}

fn write_run_outputs(
    out_dir: &Path,
    run: &RunSpec,
    log: &SessionLog,
    metrics: &MetricsReport,
) -> Result<()> {
    let dir = out_dir.join(&run.name);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("segments.csv"), log.to_csv_string())?;

    let report = RunReport {
        run: &run.name,
        config: run,
        truncated: log.truncated,
        metrics,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;

    let bitrates: Vec<f64> = log.records.iter().map(|r| r.actual_bitrate_kbps).collect();
    let rates: Vec<f64> = log
        .records
        .iter()
        .map(|r| r.measured_throughput_kbps)
        .collect();
    fs::write(dir.join("bitrate_cdf.csv"), cdf(&bitrates)?.to_csv_string())?;
    fs::write(
        dir.join("downloadrate_cdf.csv"),
        cdf(&rates)?.to_csv_string(),
    )?;
    Ok(())
}

/// One row per run, in config order, straight from the per-run reports.
fn write_matrix_summary(path: &Path, outcomes: &[RunOutcome]) -> Result<()> {
    let mut out = String::from(MATRIX_SUMMARY_HEADER);
    out.push('\n');
    for o in outcomes {
        let m = &o.metrics;
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{}",
            o.name,
            m.avg_bitrate_kbps,
            m.avg_version_index,
            m.avg_buffer_s,
            m.frac_buffer_below_low,
            m.num_switch_downs,
            m.largest_switch_down_step,
            m.total_stall_s,
            m.num_stall_events
        )?;
    }
    fs::write(path, out)?;
    Ok(())
}
