use thiserror::Error;

/// Errors produced anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("eigenphase {phase:.9} lies within the branch-cut guard band of ±π; reduce tau or split the interval")]
    BranchAmbiguity { phase: f64 },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("no analytic mean for this ensemble ({0}); estimate it by Monte Carlo")]
    NoAnalyticMean(String),

    #[error("truncation acceptance rate below {min_rate:e} over {window} draws")]
    TruncationRejected { min_rate: f64, window: usize },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("need at least {needed} samples, have {have}")]
    InsufficientSamples { needed: u64, have: u64 },

    #[error("power-law fit: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidEnsemble(_)
            | Error::InvalidProtocol(_)
            | Error::Json(_)
            | Error::NoAnalyticMean(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
