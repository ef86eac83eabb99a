use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("dense eigensolver limited to D <= {cap} (got D = {dim}); use low_lying_spectrum instead")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("steady state is not unique: null-space dimension {0}")]
    DegenerateSteadyState(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("time trace too short: {0}")]
    TooShort(String),

    #[error("time trace is not uniformly sampled")]
    NonUniformSampling,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input
    /// or resource caps).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization(_)
                | Error::NoConvergence(_)
                | Error::DegenerateSteadyState(_)
                | Error::Numerical(_)
                | Error::StepSizeUnderflow { .. }
        )
    }

    /// True when a configured size cap was exceeded.
    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::Size(_) | Error::DenseCapExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
