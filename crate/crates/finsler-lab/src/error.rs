//! Error type shared by every layer of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Syntax error while parsing an expression. `offset` is a byte offset
    /// into the source text.
    #[error("syntax error at offset {offset}: {message}")]
    Parse { message: String, offset: usize },

    #[error("unknown variable `{name}` at offset {offset}")]
    UnknownVariable { name: String, offset: usize },

    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error(
        "wrong number of arguments for `{name}` at offset {offset}: expected {expected}, got {got}"
    )]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        got: usize,
    },

    /// A math-domain violation (sqrt of a negative value, log of a
    /// non-positive value, division by zero, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Finsler norm is not positive at the sample point (F = {f})")]
    NonPositiveF { f: f64 },

    #[error("fundamental tensor is numerically singular (condition number {cond:.3e})")]
    SingularMetric { cond: f64 },

    #[error("fundamental tensor is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotConvex { min_eig: f64 },

    #[error("immersion Jacobian is rank deficient (min singular value {min_sv:.3e})")]
    RankDeficient { min_sv: f64 },

    #[error("normal frame construction broke down (residual norm {residual:.3e})")]
    FrameBreakdown { residual: f64 },

    #[error("transition matrix [B | N] is singular")]
    SingularTransition,

    /// Two independent computation paths that must agree did not.
    #[error("cross-check `{what}` failed: residual {residual:.3e} exceeds {tolerance:.3e}")]
    CrossCheck {
        what: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("scene error: {0}")]
    Scene(String),
}

impl Error {
    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::UnknownVariable { .. }
            | Error::UnknownFunction { .. }
            | Error::Arity { .. }
            | Error::Scene(_) => 2,
            Error::Domain(_)
            | Error::NonPositiveF { .. }
            | Error::SingularMetric { .. }
            | Error::NotConvex { .. }
            | Error::CrossCheck { .. } => 3,
            Error::RankDeficient { .. }
            | Error::FrameBreakdown { .. }
            | Error::SingularTransition => 4,
        }
    }
}
