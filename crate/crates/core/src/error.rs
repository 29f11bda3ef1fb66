use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdpError>;

/// Everything that can go wrong while reading, sketching or solving an instance.
#[derive(Debug, Error)]
pub enum SdpError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic bytes {found:?}, expected \"SDPS\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("truncated {section} (file is {actual} bytes, layout requires {expected})")]
    Truncated {
        section: &'static str,
        expected: u64,
        actual: u64,
    },

    #[error("trailing data after constraint block (file is {actual} bytes, layout requires {expected})")]
    TrailingData { expected: u64, actual: u64 },

    #[error("non-finite value in {section} at entry {index} (byte offset {offset})")]
    NonFinite {
        section: String,
        index: usize,
        offset: u64,
    },

    #[error("{what} is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { what: String, asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("slack not positive definite (min eigenvalue {min_eig:e}, tolerance {tol:e})")]
    NotPositiveDefinite { min_eig: f64, tol: f64 },

    #[error("non-finite eigenvalue encountered in {0}")]
    NonFiniteEigenvalue(String),

    #[error("no initial dual point: the instance must carry a strictly feasible y0")]
    NoInitialDual,

    #[error("initial dual point is infeasible: S(y0) has min eigenvalue {min_eig:e}")]
    InfeasibleStart { min_eig: f64 },

    #[error("degenerate Hessian: constraints appear linearly dependent (check for repeated or redundant A_i)")]
    DegenerateHessian,

    #[error("step rejected: outside cone after {trials} backtracking trials (min step scale {min_alpha:e})")]
    StepRejected { trials: usize, min_alpha: f64 },

    #[error("centering did not converge in {iters} iterations (decrement {decrement:e})")]
    CenteringFailed { iters: usize, decrement: f64 },

    #[error("non-finite entries in {0}")]
    NonFiniteMatrix(&'static str),
}

impl SdpError {
    /// Process exit status for this error: 2 invalid input, 3 numerical abort, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SdpError::Io(_) => 4,
            SdpError::NotPositiveDefinite { .. }
            | SdpError::NonFiniteEigenvalue(_)
            | SdpError::DegenerateHessian
            | SdpError::StepRejected { .. }
            | SdpError::CenteringFailed { .. }
            | SdpError::NonFiniteMatrix(_) => 3,
            _ => 2,
        }
    }
}
