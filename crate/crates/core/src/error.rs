use thiserror::Error;

/// Errors produced while loading inputs or running a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// A loaded or constructed value violates one of its invariants.
    /// The message names the offending field/version/segment.
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("time {time_s}s is beyond the trace horizon of {horizon_s}s")]
    BeyondHorizon { time_s: f64, horizon_s: f64 },

    /// A transfer cannot complete before the trace horizon runs out
    /// (a stalled link); the caller decides how to handle it.
    #[error(
        "transfer of {remaining_kbits} kbits starting at {start_s}s cannot \
         complete within the {horizon_s}s horizon"
    )]
    HorizonExhausted {
        start_s: f64,
        remaining_kbits: f64,
        horizon_s: f64,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
