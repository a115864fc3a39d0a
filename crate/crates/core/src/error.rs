use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("{op}: input is not symmetric (asymmetry {asymmetry:.3e})")]
    NotSymmetric { op: &'static str, asymmetry: f64 },

    #[error("{op}: input is not skew-symmetric (defect {defect:.3e})")]
    NotSkew { op: &'static str, defect: f64 },

    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (eigenvalue {eigenvalue:.3e})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("invalid dimensions p={p}, n={n}: need 1 <= n <= p")]
    InvalidDims { p: usize, n: usize },

    #[error("point is not on the Stiefel manifold (orthonormality defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("matrix is not a tangent vector at the anchor (tangency defect {defect:.3e})")]
    NotTangent { defect: f64 },

    #[error("arguments too far apart for the lifting map ({reason})")]
    ArgumentsTooFarApart { reason: String },

    #[error("tangent vector too large for the orthographic retraction (inner solve stalled after {iterations} iterations, residual {residual:.3e})")]
    TangentTooLarge { iterations: usize, residual: f64 },

    #[error("retraction/lifting combination {0} is not supported")]
    UnsupportedPair(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("iteration {iteration}{}: {cause}", sample_suffix(*.sample))]
    Iteration {
        iteration: usize,
        sample: Option<usize>,
        cause: Box<Error>,
    },

    #[error("sample {index}: {cause}")]
    Sample { index: usize, cause: Box<Error> },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn sample_suffix(sample: Option<usize>) -> String {
    match sample {
        Some(k) => format!(", sample {k}"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures caused by the numbers themselves (domain violations,
    /// loss of orthonormality, singular solves) as opposed to bad usage or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::Singular
            | Error::NotOrthonormal { .. }
            | Error::NotTangent { .. }
            | Error::ArgumentsTooFarApart { .. }
            | Error::TangentTooLarge { .. }
            | Error::NotSymmetric { .. }
            | Error::NotSkew { .. }
            | Error::NonFinite => true,
            Error::Iteration { cause, .. } | Error::Sample { cause, .. } => cause.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn for_sample(self, index: usize) -> Error {
        Error::Sample {
            index,
            cause: Box::new(self),
        }
    }

    pub(crate) fn at(self, iteration: usize, sample: Option<usize>) -> Error {
        Error::Iteration {
            iteration,
            sample,
            cause: Box::new(self),
        }
    }
}
