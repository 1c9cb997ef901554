use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum NctkError {
    #[error("unsupported dimension {0}; only n = 2 and n = 3 are supported")]
    UnsupportedDimension(usize),

    #[error("quadrature order {0} is too small; at least 4 is needed to integrate quadratics exactly")]
    QuadratureOrderTooSmall(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment of order {order} diverges for this distribution (tail exponent {alpha}); use a finite upper limit")]
    DivergentMoment { order: u32, alpha: f64 },

    #[error("value {value} outside the domain of {what}")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("epsilon {eps} too large: min sigma - theta(eps)(1-c) = {margin:.3e} is negative")]
    EpsilonTooLarge { eps: f64, margin: f64 },

    #[error("mean scattering cosine {0} has |mu| >= 1")]
    DegenerateMeanCosine(f64),

    #[error("singular per-mode system at xi = {0:?}")]
    SingularSystem([f64; 3]),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("table error: {0}")]
    Table(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl NctkError {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        NctkError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        NctkError::InvalidParameter(message.into())
    }
}

pub type Result<T> = std::result::Result<T, NctkError>;
