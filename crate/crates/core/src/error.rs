use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty track")]
    EmptyTrack,
    #[error("track mixes vehicle ids {0} and {1}")]
    MixedVehicleIds(i64, i64),
    #[error("frames out of order for vehicle {vehicle_id}: {prev} then {next}")]
    NonMonotoneFrames { vehicle_id: i64, prev: i64, next: i64 },
    #[error("states belong to different frames ({0} vs {1})")]
    FrameMismatch(i64, i64),
    #[error("vehicle {0} not present")]
    UnknownVehicle(i64),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("{path}:{line}: {reason}")]
    Data { path: PathBuf, line: u64, reason: String },
    #[error("unknown maneuver {0:?}")]
    UnknownManeuver(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("bin {velocity} m/s is insufficient ({samples} samples, {vehicles} vehicles)")]
    InsufficientBin { velocity: i64, samples: usize, vehicles: usize },
    #[error("need at least {needed} bins for a degree-{degree} fit, got {got}")]
    TooFewBins { needed: usize, got: usize, degree: usize },
    #[error("risk {0} outside [0, 1]")]
    RiskOutOfRange(f64),
    #[error("degenerate extent {0} x {1}")]
    DegenerateExtent(f64, f64),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
