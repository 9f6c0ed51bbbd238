use thiserror::Error;

/// Errors raised by the game engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter value makes a closed form divide by zero.
    #[error("singular parameter: {0}")]
    SingularParameter(String),

    /// The ratio-form equilibrium solver did not reach its tolerance.
    #[error(
        "no convergence after {iterations} iterations: alpha_s = {alpha_s}, mu_s = {mu_s}, \
         residuals = ({residual_alpha:e}, {residual_mu:e})"
    )]
    NonConvergence {
        iterations: usize,
        alpha_s: f64,
        mu_s: f64,
        residual_alpha: f64,
        residual_mu: f64,
    },

    /// A first-order condition changes sign more than once (or the wrong
    /// way), so the objective is not concave on the horizon.
    #[error("objective is not concave on the horizon; first-order condition roots at {roots:?}")]
    NonConcave { roots: Vec<f64> },

    /// Condition 1 fails everywhere on the horizon.
    #[error("no viable bounty program: {0}")]
    NoViableProgram(String),

    /// The equilibrium probabilities are clipped or do not form a
    /// distribution, so the requested computation is meaningless.
    #[error("infeasible equilibrium: {0}")]
    Infeasible(String),

    /// A scenario file failed to parse or validate.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
