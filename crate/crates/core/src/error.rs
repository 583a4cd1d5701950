use thiserror::Error;

/// Errors raised by model construction and the pointwise primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("phi(1) = {phi_one} does not exceed delta_h / B = {threshold}; no maintenance time exists")]
    NoMaintenanceTime { phi_one: f64, threshold: f64 },
    #[error("human capital cannot grow from {h} to {h_next} in one period")]
    InfeasibleGrowth { h: f64, h_next: f64 },
    #[error("transition ({k_next}, {h_next}) is outside the feasible set of ({k}, {h})")]
    Infeasible {
        k: f64,
        h: f64,
        k_next: f64,
        h_next: f64,
    },
}

/// Errors raised by the grid solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("discount condition fails: beta * zeta = {beta_zeta} >= 1")]
    DiscountCondition { beta_zeta: f64 },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid solve options: {0}")]
    Options(String),
    #[error("reduced solve needs a technology homogeneous of degree one (gamma = {gamma})")]
    NotHomogeneous { gamma: f64 },
    #[error("value iteration stopped after {iterations} iterations with sup change {last_change:e}")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        partial: Box<crate::solver::SolveResult>,
    },
}

/// Errors raised while building or evaluating paths.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("start state ({k}, {h}) must be strictly positive")]
    StartOnAxis { k: f64, h: f64 },
    #[error("path contains a period with utility -inf (t = {period})")]
    NegativeInfinity { period: usize },
    #[error("path has no transitions")]
    Empty,
    #[error("shifted bound needs theta <= 0, got {theta}")]
    ThetaPositive { theta: f64 },
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
}
