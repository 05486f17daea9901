use thiserror::Error;

/// Errors produced by the spin-network library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("propagation did not converge: {0}")]
    NonConvergence(String),

    /// The scattered packets still overlap the interaction region; rerun with a longer time.
    #[error("packets not separated at t = {time}: interaction-region occupancy {occupancy:.3e}")]
    NotSeparated { time: f64, occupancy: f64 },

    #[error("wave packet reached an open boundary (occupancy {occupancy:.3e} near {region})")]
    BoundaryReached { region: String, occupancy: f64 },

    #[error("projection onto {0} has zero probability")]
    ZeroProbability(String),

    #[error("not a valid density matrix: {0}")]
    InvalidDensity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
