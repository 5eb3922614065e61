use thiserror::Error;

/// Problems with a scenario configuration, either while parsing or validating.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

/// Failures of the particle integrator.
#[derive(Debug, Error)]
pub enum ParticleError {
    #[error("non-finite state for agent {agent} at step {step}")]
    NonFinite { step: u64, agent: usize },
    #[error("unstable step {step}: agent {agent} moved {displacement:.3e} in one step, more than the domain extent")]
    Unstable { step: u64, agent: usize, displacement: f64 },
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
}

/// Failures of the mean-field solver.
#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error(
        "CFL violation in velocity step: cell {cell} has |drift| = {speed:.4e}, \
         CFL number {cfl:.3} > 1; use dt <= {suggested_dt:.4e}"
    )]
    Cfl {
        cell: usize,
        speed: f64,
        cfl: f64,
        suggested_dt: f64,
    },
    #[error("empty support: no cell centre lies inside the requested box")]
    EmptySupport,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite density after step")]
    NonFinite,
}

/// Errors from reading or writing the on-disk formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad grid snapshot: {0}")]
    BadGrid(String),
    #[error("bad particle snapshot: {0}")]
    BadParticles(String),
}

/// Errors from diagnostics with malformed input.
#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
}
