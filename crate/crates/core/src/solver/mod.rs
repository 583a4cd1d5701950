//! Value iteration for the Bellman equation on a log-spaced grid.
//!
//! The 2-D solve works on `(k, h)` directly. When the technology is
//! homogeneous of degree one, [`solve_reduced`] instead iterates on
//! `W(x) = V(x, 1)` and rebuilds `V(k, h) = h^θ W(k/h) + U(h)/(1-β)`.

mod backup;
mod grid;
pub mod io;
mod iterate;
mod oracle;
mod reduced;
mod search;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;

pub use backup::{bellman_backup, Backup};
pub use grid::{log_space, GridSpec, PolicyField, ValueField, MIN_NODES};
pub use iterate::{
    homogeneity_residual, solve_transformed, solve_value_iteration, solve_with, HOMOGENEITY_LAMBDAS,
};
pub use oracle::finite_horizon_oracle;
pub use reduced::{solve_reduced, RatioField, ReducedSolve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnerSearch {
    /// Repeatedly re-scan a shrinking lattice around the incumbent.
    GridRefinement { levels: usize },
    /// Golden-section search over `h'`, each step maximizing over `k'` by
    /// golden-section search too.
    GoldenSectionNested { iterations: usize },
}

impl Default for InnerSearch {
    fn default() -> Self {
        InnerSearch::GoldenSectionNested { iterations: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Sup-norm stopping threshold.
    pub tol: f64,
    pub max_iterations: usize,
    pub inner_search: InnerSearch,
    /// Lattice points per coordinate in the scan before refinement.
    pub inner_points: usize,
    /// Lower clamp applied when values are printed. Never used while
    /// maximizing.
    pub value_floor: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iterations: 2000,
            inner_search: InnerSearch::default(),
            inner_points: 17,
            value_floor: -1e9,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(SolveError::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::Options("max_iterations must be positive".into()));
        }
        if self.inner_points < 3 {
            return Err(SolveError::Options(format!(
                "inner_points must be at least 3, got {}",
                self.inner_points
            )));
        }
        match self.inner_search {
            InnerSearch::GridRefinement { levels: 0 }
            | InnerSearch::GoldenSectionNested { iterations: 0 } => {
                Err(SolveError::Options("refinement depth must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Direction of one value-iteration step over the nodes finite in both
/// iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSign {
    Up,
    Down,
    Flat,
    Mixed,
}

impl StepSign {
    pub(crate) fn of(old: &[f64], new: &[f64]) -> StepSign {
        let (mut up, mut down) = (false, false);
        for (a, b) in old.iter().zip(new) {
            if a.is_finite() && b.is_finite() {
                up |= b > a;
                down |= b < a;
            }
        }
        match (up, down) {
            (true, true) => StepSign::Mixed,
            (true, false) => StepSign::Up,
            (false, true) => StepSign::Down,
            (false, false) => StepSign::Flat,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub method: String,
    pub converged: bool,
    pub iterations: usize,
    pub final_sup_change: f64,
    pub max_bellman_residual: f64,
    pub homogeneity_residual: Option<f64>,
    /// Maximizers of the last backup that left the grid hull and were
    /// evaluated on its boundary.
    pub clipped_transitions: usize,
    /// Nodes whose value is `-inf`.
    pub non_finite_nodes: Vec<usize>,
    /// Sup change per iteration.
    pub history: Vec<f64>,
    /// Direction of each step; the first entry is `V_1 - V_0`.
    pub step_signs: Vec<StepSign>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub value: ValueField,
    pub policy: PolicyField,
    pub iterations: usize,
    pub final_sup_change: f64,
    pub max_bellman_residual: f64,
    pub homogeneity_residual: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// Largest `|a - b|` over entries finite in both.
pub(crate) fn sup_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
