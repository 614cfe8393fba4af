use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A model or distribution parameter violates its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration did not converge after {iterations} steps: {reason}")]
    NonConvergence { iterations: usize, reason: String },

    #[error("linear system is singular (pivot vanished at column {column})")]
    SingularSystem { column: usize },

    #[error("quadrature failed to reach tolerance {tolerance:e} (estimate {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("degenerate batch law: all mass at size zero")]
    DegenerateBatch,

    #[error("state pair ({i}, {j}) falls in no transition region")]
    RegionError { i: usize, j: usize },

    #[error("row {row} of the transition matrix deviates from 1 by {deviation:e}")]
    StochasticityViolation { row: usize, deviation: f64 },

    #[error("rejection policy requires a finite buffer")]
    PolicyError,

    #[error("upward transition probability p({state}, {next}) vanished at working precision", next = state + 1)]
    DivisionHazard { state: usize },

    #[error("negative probability {value:e} at state {state}")]
    NegativeProbability { state: usize, value: f64 },

    #[error("simulation horizon too short: {0}")]
    InvalidHorizon(String),
}

impl Error {
    /// True for errors that come from bad inputs rather than from the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::Precondition(_)
                | Error::PolicyError
                | Error::DegenerateBatch
                | Error::InvalidHorizon(_)
        )
    }
}
