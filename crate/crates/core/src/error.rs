use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Numerical blowup or loss of normalizability during an integration.
    #[error("integration failed at tau = {tau}: {reason}")]
    IntegrationFailure { tau: f64, reason: String },

    /// The Mathieu solution passed (numerically) through zero at the end time.
    #[error("degenerate solution: |u(tau_f)| = {modulus:e} at tau = {tau}")]
    DegenerateSolution { tau: f64, modulus: f64 },

    #[error("insufficient data for fit: {found} usable points, need at least {required}")]
    InsufficientData { found: usize, required: usize },

    #[error("coupling matrices are not simultaneously diagonalizable (residual {residual:e} >= tol {tol:e})")]
    NotSimultaneouslyDiagonalizable { residual: f64, tol: f64 },

    #[error("static coupling matrix is not positive definite (eigenvalue {eigenvalue})")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("wavepacket reached the grid boundary at tau = {tau}: edge probability {edge_probability:e}")]
    GridOverflow { tau: f64, edge_probability: f64 },

    /// A tracked state with an odd quantum number in some mode.
    #[error("state {state:?} is forbidden by the parity selection rule")]
    SelectionRule { state: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Whether the error comes from validating inputs rather than from running them.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Config(_)
                | Error::SelectionRule { .. }
                | Error::NotSimultaneouslyDiagonalizable { .. }
                | Error::NotPositiveDefinite { .. }
        )
    }
}
