use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),

    #[error("spectrum mismatch between measured and probe observables: {0}")]
    SpectrumMismatch(String),

    #[error("outcome {outcome} is not an eigenvalue of the observable")]
    UnknownOutcome { outcome: f64 },

    #[error(
        "outcome {outcome} has probability {probability:.3e}, the conditional state is undefined"
    )]
    ZeroProbability { outcome: f64, probability: f64 },

    #[error(
        "measurement model does not measure the claimed observable (max deviation {deviation:.3e})"
    )]
    UnverifiedModel { deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
