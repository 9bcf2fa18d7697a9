use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix {name} is not symmetric (relative asymmetry {residual:.3e})")]
    NotSymmetric { name: &'static str, residual: f64 },

    /// The matrix handed to an SVD-based construction is zero; the scheduling
    /// matrices are unconstrained in that case and must be built directly.
    #[error("rank-zero matrix: {0}")]
    RankZero(String),

    /// A hypothesis of one of the composition theorems does not hold.
    #[error("theorem precondition failed: {0}")]
    TheoremPrecondition(String),

    #[error("matrix is not Hurwitz (spectral abscissa {0:.6e})")]
    NotHurwitz(f64),

    #[error("pair is not stabilizable: {0}")]
    NotStabilizable(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("simulation diverged at t = {t} s (state norm {norm:.3e})")]
    Diverged { t: f64, norm: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("linearization point {index}: {source}")]
    AtPoint { index: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn theorem(msg: impl Into<String>) -> Self {
        Error::TheoremPrecondition(msg.into())
    }

    /// Innermost error, looking through point annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            e => e,
        }
    }
}
