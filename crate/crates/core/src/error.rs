use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("user {user}: {dof} streams requested but only {available} dimensions available")]
    Dimension {
        user: usize,
        dof: usize,
        available: usize,
    },

    /// The antenna floor min(m, n) >= ceil(d_hat / K) does not hold.
    #[error("antenna floor violated: min(m, n) = {min_antennas} < ceil(d_hat / K) = {required}")]
    AntennaFloor { min_antennas: usize, required: usize },

    /// Null space of the reciprocal interference covariance is too small.
    /// `nullity` is signed because the predicted value n̄_k - (d̂ - d_k)
    /// goes negative for badly overloaded systems.
    #[error(
        "one-shot infeasible at user {user}: null space has {nullity} dimensions, \
         {dof} streams requested (one-shot alignment requires d_hat <= n_bar)"
    )]
    OneShotInfeasible { user: usize, nullity: i64, dof: usize },

    #[error("user {user}: desired link U^H G W is rank deficient (smallest singular value {min_singular:.3e})")]
    RankDeficientDesired { user: usize, min_singular: f64 },

    #[error("block diagonalization infeasible at user {user}: {reason}")]
    BdInfeasible { user: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
