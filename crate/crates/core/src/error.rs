//! Crate-wide error type and exit-code classification.

use thiserror::Error;

/// Errors produced by any operation in this crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A[i][j] - conj(A[j][i])| = {max_asymmetry:.3e} exceeds tol {tol:.3e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },

    #[error("eigendecomposition did not converge within {max_rotations} Jacobi rotations (off-diagonal norm {off_norm:.3e})")]
    ConvergenceFailure { max_rotations: usize, off_norm: f64 },

    #[error("matrix is singular or near-singular: min |lambda| = {min_abs_eigenvalue:.3e} <= tol {tol:.3e}")]
    SingularMatrix { min_abs_eigenvalue: f64, tol: f64 },

    #[error("state of {requested} qubits exceeds the qubit cap {cap}")]
    TooManyQubits { requested: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not unitary: max deviation {deviation:.3e} exceeds tol {tol:.3e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("registers overlap: {0}")]
    OverlappingRegisters(String),

    #[error("register layout mismatch between states")]
    LayoutMismatch,

    #[error("no register named '{0}' in layout")]
    NoSuchRegister(String),

    #[error("eigenvalue {lambda} out of bound: |lambda| >= D = {bound}")]
    OutOfBound { lambda: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("circuit capacity exceeded: {0}")]
    CapacityExceeded(String),

    #[error("flag qubits already set on this pipeline state")]
    FlagsAlreadySet,

    #[error("pipeline already consumed its {0} configured applications")]
    PipelineExhausted(usize),

    #[error("could not draw an initial vector with |<E_n, x0>| >= {floor:.1e} after {attempts} attempts")]
    ExhaustedRedraws { attempts: usize, floor: f64 },

    #[error("iterate collapsed to the zero vector")]
    ZeroVector,

    #[error("overlap denominator too small: |{value:.3e}| < 5 * std_error {std_error:.3e}; increase shots or C")]
    DenominatorTooSmall { value: f64, std_error: f64 },

    #[error("ill-conditioned Krylov basis: only {survived} directions above cond_tol, {requested} requested")]
    IllConditionedKrylov { survived: usize, requested: usize },

    #[error("bad fixture parameters: {0}")]
    BadParams(String),

    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("parse error in {path}: {message}")]
    ParseError { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse failure classes, used by the CLI to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// File system and parsing problems (exit 2).
    Io,
    /// Invalid inputs or configuration (exit 3).
    Validation,
    /// Numerical failure during computation (exit 4).
    Numeric,
    /// Shot noise dominates the estimate (exit 5).
    ShotNoise,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            FileNotFound(_) | ParseError { .. } | Io(_) => ErrorClass::Io,
            NotHermitian { .. }
            | TooManyQubits { .. }
            | DimensionMismatch { .. }
            | NotUnitary { .. }
            | OverlappingRegisters(_)
            | LayoutMismatch
            | NoSuchRegister(_)
            | OutOfBound { .. }
            | InvalidConfig(_)
            | CapacityExceeded(_)
            | FlagsAlreadySet
            | PipelineExhausted(_)
            | BadParams(_) => ErrorClass::Validation,
            ConvergenceFailure { .. }
            | SingularMatrix { .. }
            | ExhaustedRedraws { .. }
            | ZeroVector
            | IllConditionedKrylov { .. } => ErrorClass::Numeric,
            DenominatorTooSmall { .. } => ErrorClass::ShotNoise,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
