use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The control variate carries no information (zero variance around its mean).
    #[error("degenerate control variate: {0}")]
    DegenerateCv(String),

    /// An estimator was asked for before enough samples were collected.
    #[error("insufficient samples: need at least {needed}, have {have}")]
    InsufficientSamples { needed: usize, have: usize },

    /// The CV covariance matrix could not be solved even after ridging.
    #[error("singular CV covariance matrix (condition estimate {condition:.3e})")]
    SingularCovariance { condition: f64 },

    /// Invalid run configuration (unknown policy, bad instance, T < QK, ...).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
