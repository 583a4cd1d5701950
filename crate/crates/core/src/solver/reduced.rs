use rayon::prelude::*;

use crate::error::SolveError;
use crate::primitives::{State, Technology};
use crate::utility::utility;

use super::backup::assemble;
use super::grid::{Axis, GridSpec, ValueField};
use super::iterate::{check_discount, homogeneity_residual, HOMOGENEITY_LAMBDAS};
use super::search::{maximize, Choice, Continuation};
use super::{sup_change, Diagnostics, SolveOptions, SolveResult, StepSign};

/// `W(x) = V(x, 1)` on the ratio axis, linear in `log x`, clamped outside.
#[derive(Debug, Clone)]
pub struct RatioField {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    axis: Axis,
}

impl RatioField {
    fn new(nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let axis = Axis::new(&nodes);
        RatioField { nodes, values, axis }
    }

    #[inline]
    fn eval_log(&self, lx: f64) -> f64 {
        let c = self.axis.locate_log(lx);
        let (a, b) = (self.values[c.i], self.values[c.i + 1]);
        if a.is_finite() && b.is_finite() {
            a + c.w * (b - a)
        } else if c.w < 0.5 {
            a
        } else {
            b
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_log(x.ln())
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.nodes[0] && x <= self.nodes[self.nodes.len() - 1]
    }
}

/// Continuation `V(k', g) = g^θ W(k'/g) + U(g)/(1-β)` at unit current `h`.
struct RatioContinuation<'a> {
    w: &'a RatioField,
    theta: f64,
    beta: f64,
}

struct GrowthRow {
    log_g: f64,
    weight: f64,
    level: f64,
}

impl Continuation for RatioContinuation<'_> {
    type Row = GrowthRow;

    fn row(&self, g: f64) -> GrowthRow {
        if g <= 0.0 {
            // No human capital left: only the level term survives, and it is
            // -inf unless utility is bounded below.
            let level = if self.theta > 0.0 {
                -1.0 / (self.theta * (1.0 - self.beta))
            } else {
                f64::NEG_INFINITY
            };
            return GrowthRow {
                log_g: 0.0,
                weight: 0.0,
                level,
            };
        }
        GrowthRow {
            log_g: g.ln(),
            weight: g.powf(self.theta),
            level: utility(g, self.theta) / (1.0 - self.beta),
        }
    }

    #[inline]
    fn value(&self, row: &GrowthRow, k_next: f64) -> f64 {
        if row.weight == 0.0 {
            return row.level;
        }
        row.weight * self.w.eval_log(k_next.ln() - row.log_g) + row.level
    }

    fn k_breaks(&self, row: &GrowthRow) -> (f64, &[f64]) {
        if row.weight == 0.0 {
            (1.0, &[])
        } else {
            (row.log_g.exp(), &self.w.nodes)
        }
    }
}

/// Output of [`solve_reduced`]: the 1-D solution and the 2-D field rebuilt
/// from it on `grid`.
#[derive(Debug, Clone)]
pub struct ReducedSolve {
    pub ratio: RatioField,
    pub result: SolveResult,
    theta: f64,
    beta: f64,
}

/// Homogeneity-reduced solve on `grid.ratio_nodes`, reconstructed onto the
/// `(k, h)` nodes of `grid`. Pass [`crate::primitives::ChangeOfVariables`]
/// to use it with an externality.
pub fn solve_reduced<T: Technology>(
    tech: &T,
    grid: &GridSpec,
    options: &SolveOptions,
) -> Result<ReducedSolve, SolveError> {
    let p = *tech.params();
    if !tech.is_homogeneous() {
        return Err(SolveError::NotHomogeneous { gamma: p.gamma });
    }
    check_discount(&p)?;
    options.validate()?;
    grid.validate()?;
    let (theta, beta) = (p.theta.value(), p.beta);
    let nodes = grid.ratio_nodes.clone();

    let step = |w: &RatioField| -> Vec<Choice> {
        let cont = RatioContinuation { w, theta, beta };
        nodes
            .par_iter()
            .map(|&x| maximize(tech, &cont, x, 1.0, options.inner_search, options.inner_points))
            .collect()
    };

    let mut w = RatioField::new(nodes.clone(), vec![0.0; nodes.len()]);
    let mut history = Vec::new();
    let mut signs = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iterations {
        let next: Vec<f64> = step(&w).iter().map(|c| c.value).collect();
        let change = sup_change(&w.values, &next);
        signs.push(StepSign::of(&w.values, &next));
        history.push(change);
        w = RatioField::new(nodes.clone(), next);
        if change <= options.tol {
            converged = true;
            break;
        }
    }
    let fin = step(&w);
    let fin_values: Vec<f64> = fin.iter().map(|c| c.value).collect();
    let residual = sup_change(&w.values, &fin_values);

    // Rebuild V and the policy node by node, scaling the unit-h choice.
    let values: Vec<f64> = (0..grid.len())
        .map(|idx| {
            let s = grid.node(idx);
            s.h.powf(theta) * w.eval(s.k / s.h) + utility(s.h, theta) / (1.0 - beta)
        })
        .collect();
    let value = ValueField::new(grid.clone(), values)?;
    let cont = RatioContinuation { w: &w, theta, beta };
    let choices: Vec<Choice> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let s = grid.node(idx);
            let c = maximize(tech, &cont, s.k / s.h, 1.0, options.inner_search, options.inner_points);
            Choice {
                value: value.values()[idx],
                k_next: c.k_next * s.h,
                h_next: c.h_next * s.h,
            }
        })
        .collect();
    let packed = assemble(tech, grid.clone(), &choices, |c| {
        c.h_next <= 0.0 || !w.contains(c.k_next / c.h_next)
    });
    let clipped = fin
        .iter()
        .filter(|c| c.value.is_finite() && (c.h_next <= 0.0 || !w.contains(c.k_next / c.h_next)))
        .count();

    let homogeneity = homogeneity_residual(&value, p.theta, beta, &HOMOGENEITY_LAMBDAS, |_| true);
    let iterations = history.len();
    let last = history.last().copied().unwrap_or(f64::INFINITY);
    let non_finite = (0..grid.len())
        .filter(|&i| value.values()[i] == f64::NEG_INFINITY)
        .collect();
    let result = SolveResult {
        policy: packed.policy,
        iterations,
        final_sup_change: last,
        max_bellman_residual: residual,
        homogeneity_residual: Some(homogeneity),
        diagnostics: Diagnostics {
            method: "reduced".into(),
            converged,
            iterations,
            final_sup_change: last,
            max_bellman_residual: residual,
            homogeneity_residual: Some(homogeneity),
            clipped_transitions: clipped,
            non_finite_nodes: non_finite,
            history,
            step_signs: signs,
        },
        value,
    };
    if !converged {
        return Err(SolveError::NotConverged {
            iterations,
            last_change: last,
            partial: Box::new(result),
        });
    }
    Ok(ReducedSolve {
        ratio: w,
        result,
        theta,
        beta,
    })
}

impl ReducedSolve {
    /// `V(k, h)` straight from the identity, without 2-D interpolation.
    pub fn value_at(&self, s: State) -> f64 {
        let t = self.theta;
        s.h.powf(t) * self.ratio.eval(s.k / s.h) + utility(s.h, t) / (1.0 - self.beta)
    }
}
