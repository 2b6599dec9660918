use thiserror::Error;

/// Errors raised by model construction, the analytic solver, the simulator
/// and the verifier.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the requested function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters violate a structural invariant.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Control parameters are not admissible for the model.
    #[error("inadmissible parameters: {0}")]
    Admissibility(String),

    /// The model is outside the family the closed forms support.
    #[error("unsupported model: {0}")]
    Unsupported(String),

    /// A closed form was evaluated at (or numerically next to) its pole.
    #[error("pole: {0}")]
    Pole(String),

    /// Root bracketing or refinement failed.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// Two routes that must agree did not.
    #[error("internal consistency: {0}")]
    Consistency(String),

    /// Simulation configuration is unusable.
    #[error("simulation config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
