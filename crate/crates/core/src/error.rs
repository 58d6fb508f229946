use thiserror::Error;

use crate::solvers::Projection;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported exponent p = {0}: expected 1 < p < inf")]
    InvalidExponent(f64),

    #[error("norming functional is undefined for the zero function")]
    ZeroFunction,

    #[error("functions live on different grids")]
    GridMismatch,

    #[error("value count {got} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("sample values must be finite")]
    NonFinite,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("span is numerically dependent (Gram condition number {condition:.3e})")]
    NumericallyDependentSpan { condition: f64 },

    #[error(
        "projection did not converge in {} iterations (optimality {optimality:.3e})",
        best.iterations_used
    )]
    NoConvergence { best: Box<Projection>, optimality: f64 },

    #[error("singular Gram submatrix on subset {0:?}")]
    SingularGram(Vec<usize>),

    #[error("exhaustive search needs {needed} subset projections, cap is {cap}; use capped mode")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("dictionary `{0}` has no computable coefficient functionals")]
    NotOrthogonal(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::InvalidParameter { .. }
                | Error::InvalidExponent(_)
                | Error::SchemaVersion { .. }
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
