use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("membrane contact: deflection {deflection:.3e} m reaches limit {limit:.3e} m")]
    MembraneContact { deflection: f64, limit: f64 },

    #[error("membrane contact on element {element} at t = {time_s:.6} s: {source}")]
    ContactAt {
        element: usize,
        time_s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid waveform spec: {0}")]
    InvalidSpec(String),

    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("modulator is configured for {configured} input")]
    ModeMismatch { configured: &'static str },

    #[error("filter design infeasible: {metric} = {value:.3}, required {requirement}")]
    DesignInfeasible {
        metric: &'static str,
        value: f64,
        requirement: String,
    },

    #[error("need {needed} valid samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no element has enough valid samples")]
    NoValidData,

    #[error("calibration anchors are degenerate (raw_sys == raw_dia == {0})")]
    DegenerateAnchors(f64),

    #[error("calibration impossible: {0}")]
    CalibrationImpossible(String),

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 2 configuration, 3 simulation, 4 calibration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidParameter { .. }
            | Error::InvalidSpec(_)
            | Error::DesignInfeasible { .. }
            | Error::Format { .. } => 2,
            Error::NoValidData | Error::DegenerateAnchors(_) | Error::CalibrationImpossible(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }
}
