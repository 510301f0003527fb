use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// log-Gamma was asked for a nonpositive argument. Upstream this almost
    /// always means a pattern that does not interlace.
    #[error("log_gamma domain error: argument {0} is not positive")]
    Domain(f64),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("move leaves the state space")]
    RejectedMove,

    #[error("quadrature did not converge: {nodes} nodes, last delta {delta:e}")]
    NonConvergence { nodes: usize, delta: f64 },

    #[error("|Z| = {modulus:e} is below the cancellation threshold ({scale:e} total mass)")]
    NearZeroPartition { modulus: f64, scale: f64 },

    #[error("evaluation point {0} sits on a pole of an expectation")]
    OnPole(Complex64),

    #[error("{0}")]
    Unsupported(String),

    #[error("batch format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
