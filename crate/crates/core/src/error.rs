use thiserror::Error;

use crate::hilbert::BasisTag;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis mismatch: expected {expected}, got {found}")]
    BasisMismatch { expected: BasisTag, found: BasisTag },

    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("state is not normalized: trace = {trace}")]
    NotNormalized { trace: f64 },

    #[error("mean spin length {0:e} is too small for the Wineland parameter")]
    VanishingMeanSpin(f64),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("Fock truncation unsafe: top-two-level population {tail:e} exceeds {limit:e} (n_max = {n_max})")]
    TruncationUnsafe { tail: f64, limit: f64, n_max: usize },

    #[error("unknown preset `{0}` (expected one of rb_atoms, siv_centers, bec)")]
    UnknownPreset(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
