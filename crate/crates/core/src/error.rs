use thiserror::Error;

/// Errors raised while evaluating the model or validating its inputs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("kernel evaluated at s = {s}, must be > 0")]
    KernelDomain { s: f64 },

    #[error("singular pair ({i}, {j}) at distance {r:e}")]
    Singularity { i: usize, j: usize, r: f64 },
}

/// Errors raised by the time integrator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid step control: {0}")]
    InvalidControl(String),

    #[error("step size {dt:e} fell below dt_min at t = {t} (min pair distance {r_min:e})")]
    StepTooSmall { t: f64, dt: f64, r_min: f64 },

    #[error("collision of pair ({i}, {j}) at t = {t}: distance {r:e} below floor")]
    Collision { t: f64, i: usize, j: usize, r: f64 },

    #[error("exceeded {0} steps")]
    MaxSteps(usize),

    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

/// A configuration key that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{path}: {reason}")]
pub struct ConfigError {
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Failures while reading or writing a results directory.
#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed content: {reason}")]
    Format { path: String, reason: String },
}

impl OutputError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, reason: impl Into<String>) -> Self {
        Self::Format {
            path: path.display().to_string(),
            reason: reason.into(),
        }
    }
}
