use thiserror::Error;

use crate::mps::Mps;

#[derive(Debug, Error)]
pub enum Error {
    /// Leg extents or tensor shapes that do not fit together.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A physical or numerical parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A configuration that cannot be realised, e.g. a non-square split dimension.
    #[error("configuration error: {0}")]
    Config(String),

    /// The effective Hamiltonian seen by a local update is not Hermitian.
    #[error("effective Hamiltonian not Hermitian at site {site}: deviation {deviation:.3e}")]
    NonHermitian { site: usize, deviation: f64 },

    /// A tensor picked up NaN or infinite entries during evolution. The
    /// checkpoint holds the last state that was entirely finite.
    #[error("non-finite values in state at step {step} (t = {time})")]
    NonFinite {
        step: usize,
        time: f64,
        checkpoint: Box<Mps>,
    },

    /// The dense oracle refuses to build matrices above its size cap.
    #[error("dense dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Dimension(msg.into()))
}
