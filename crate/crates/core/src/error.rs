use thiserror::Error;

/// Errors produced by the footstep pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is behind the camera (z = {0})")]
    BehindCamera(f64),
    #[error("invalid depth value {0}")]
    InvalidDepth(f64),
    #[error("no step direction available yet")]
    UndefinedDirection,
    #[error("no steppable region inside the search space")]
    NoSteppableRegion,
    #[error("degenerate plane-fit stencil")]
    DegenerateStencil,
    #[error("invalid swing specification: {0}")]
    InvalidSwing(String),
    #[error("sample time is NaN")]
    NanTime,
    #[error("cannot step with the support foot ({0:?}) while another step is in progress")]
    SupportFootBusy(crate::geometry::FootSide),
    #[error("time went backwards: {now} < {last}")]
    NonMonotonicTime { last: f64, now: f64 },
    #[error("sync log is empty")]
    EmptyLog,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BehindCamera(_) => "behind_camera",
            Error::InvalidDepth(_) => "invalid_depth",
            Error::UndefinedDirection => "undefined_direction",
            Error::NoSteppableRegion => "no_steppable_region",
            Error::DegenerateStencil => "degenerate_stencil",
            Error::InvalidSwing(_) => "invalid_swing",
            Error::NanTime => "nan_time",
            Error::SupportFootBusy(_) => "support_foot_busy",
            Error::NonMonotonicTime { .. } => "non_monotonic_time",
            Error::EmptyLog => "empty_log",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse { .. } => "parse",
            Error::InvalidInput(_) => "invalid_input",
            Error::DimensionMismatch(_) => "dimension_mismatch",
        }
    }
}
