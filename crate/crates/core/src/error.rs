use thiserror::Error;

use crate::tensor::Subsystem;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("subsystem {0:?} is not part of the layout")]
    MissingSubsystem(Subsystem),

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("partial trace needs at least one subsystem to keep")]
    EmptyKeepSet,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("negative duration {0}")]
    NegativeDuration(f64),

    #[error("schedule has no segments")]
    EmptySchedule,

    #[error("cycle shorter than gate sequence: period {period} < {required}")]
    CycleTooShort { period: f64, required: f64 },

    #[error("unsupported rotation target {0:?}")]
    UnsupportedTarget(Subsystem),

    #[error("invalid pulse segment: {0}")]
    InvalidSegment(String),

    #[error("operator leaves the invariant sector (residual {residual:.3e})")]
    OutOfSector { residual: f64 },

    #[error("fixed point is not unique: {unit_eigenvalues} eigenvalues within {tolerance:e} of 1")]
    DegenerateFixedPoint {
        unit_eigenvalues: usize,
        tolerance: f64,
    },

    #[error("stationary residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("rectification undefined: reverse-bias current {0:e} is zero")]
    UndefinedRectification(f64),

    #[error("sweep spec: {0}")]
    SweepSpec(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. }
            | Error::MissingSubsystem(_)
            | Error::InvalidLayout(_)
            | Error::EmptyKeepSet => "dimension",
            Error::InvalidState(_) => "state",
            Error::InvalidParams(_)
            | Error::NegativeDuration(_)
            | Error::EmptySchedule
            | Error::CycleTooShort { .. }
            | Error::UnsupportedTarget(_)
            | Error::InvalidSegment(_)
            | Error::SweepSpec(_) => "config",
            Error::OutOfSector { .. } => "sector",
            Error::DegenerateFixedPoint { .. } | Error::Residual { .. } => "convergence",
            Error::UndefinedRectification(_) => "undefined",
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
