use crate::error::SolveError;
use crate::primitives::{ChangeOfVariables, Direct, ModelParams, Technology};
use crate::utility::{utility, Theta};
use crate::verify::compute_constants;

use super::backup::backup_with;
use super::grid::{GridSpec, ValueField};
use super::{sup_change, Diagnostics, SolveOptions, SolveResult, StepSign};

/// Scales used for the homogeneity residual.
pub const HOMOGENEITY_LAMBDAS: [f64; 2] = [0.5, 0.8];

pub(crate) fn check_discount(params: &ModelParams) -> Result<(), SolveError> {
    params.validate()?;
    let bz = compute_constants(params).beta_zeta;
    if bz < 1.0 {
        Ok(())
    } else {
        Err(SolveError::DiscountCondition { beta_zeta: bz })
    }
}

/// Solves the model in its original variables from `V_0 = 0`.
pub fn solve_value_iteration(
    params: &ModelParams,
    grid: &GridSpec,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    check_discount(params)?;
    solve_with(&Direct::new(params), grid, options, "value-iteration")
}

/// Solves the externality model in `(k, ĥ)` and relabels the result onto
/// `grid`, given in the original `(k, h)` units.
///
/// Log-spaced `h` nodes map to log-spaced `ĥ` nodes, so interpolation in
/// `log ĥ = ρ log h` uses the same weights on either grid; the relabelled
/// field is the transformed solution evaluated at `ĥ = h^ρ`.
pub fn solve_transformed(
    params: &ModelParams,
    grid: &GridSpec,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    check_discount(params)?;
    let tech = ChangeOfVariables::new(params);
    let rho = tech.rho();
    let hat = grid.map_h(|h| h.powf(rho));
    let mut res = solve_with(&tech, &hat, options, "change-of-variables")?;
    res.value = ValueField::new(grid.clone(), res.value.values().to_vec())?;
    let p = &mut res.policy;
    p.grid = grid.clone();
    for h in p.h_next.iter_mut() {
        *h = h.powf(1.0 / rho);
    }
    Ok(res)
}

/// Value iteration for any technology on a grid in its own coordinates.
pub fn solve_with<T: Technology>(
    tech: &T,
    grid: &GridSpec,
    options: &SolveOptions,
    method: &str,
) -> Result<SolveResult, SolveError> {
    options.validate()?;
    grid.validate()?;
    let mut v = ValueField::constant(grid.clone(), 0.0)?;
    let mut history = Vec::new();
    let mut signs = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iterations {
        let next = backup_with(tech, &v, options).value;
        let change = sup_change(v.values(), next.values());
        signs.push(StepSign::of(v.values(), next.values()));
        history.push(change);
        v = next;
        if change <= options.tol {
            converged = true;
            break;
        }
    }
    let fin = backup_with(tech, &v, options);
    let residual = sup_change(v.values(), fin.value.values());
    let p = tech.params();
    let homogeneity = tech
        .is_homogeneous()
        .then(|| homogeneity_residual(&v, p.theta, p.beta, &HOMOGENEITY_LAMBDAS, |_| true));
    let iterations = history.len();
    let last = history.last().copied().unwrap_or(f64::INFINITY);
    let non_finite = (0..grid.len())
        .filter(|&i| v.values()[i] == f64::NEG_INFINITY)
        .collect();
    let result = SolveResult {
        policy: fin.policy,
        iterations,
        final_sup_change: last,
        max_bellman_residual: residual,
        homogeneity_residual: homogeneity,
        diagnostics: Diagnostics {
            method: method.to_string(),
            converged,
            iterations,
            final_sup_change: last,
            max_bellman_residual: residual,
            homogeneity_residual: homogeneity,
            clipped_transitions: fin.clipped,
            non_finite_nodes: non_finite,
            history,
            step_signs: signs,
        },
        value: v,
    };
    if converged {
        Ok(result)
    } else {
        Err(SolveError::NotConverged {
            iterations,
            last_change: last,
            partial: Box::new(result),
        })
    }
}

/// `max |V(λk,λh) - λ^θ V(k,h) - U(λ)/(1-β)| / (1 + |V(k,h)|)` over nodes
/// accepted by `include` whose scaled image stays inside the grid hull.
pub fn homogeneity_residual(
    v: &ValueField,
    theta: Theta,
    beta: f64,
    lambdas: &[f64],
    include: impl Fn(usize) -> bool,
) -> f64 {
    let t = theta.value();
    let grid = v.grid();
    let mut worst: f64 = 0.0;
    for idx in (0..grid.len()).filter(|&i| include(i)) {
        let base = v.values()[idx];
        if !base.is_finite() {
            continue;
        }
        let s = grid.node(idx);
        for &lambda in lambdas {
            let scaled = s.scale(lambda);
            if !grid.contains(scaled) {
                continue;
            }
            let vs = v.eval_state(scaled);
            if !vs.is_finite() {
                continue;
            }
            let predicted = lambda.powf(t) * base + utility(lambda, t) / (1.0 - beta);
            worst = worst.max((vs - predicted).abs() / (1.0 + base.abs()));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discount_gate() {
        let p = ModelParams {
            beta: 0.9,
            ..ModelParams::baseline()
        };
        let g = GridSpec::log_spaced((0.25, 4.0), 4, (0.25, 4.0), 4).unwrap();
        let r = solve_value_iteration(&p, &g, &SolveOptions::default());
        assert!(matches!(r, Err(SolveError::DiscountCondition { .. })));
    }

    #[test]
    fn forced_non_convergence_keeps_partial_result() {
        let p = ModelParams::baseline();
        let g = GridSpec::log_spaced((0.25, 4.0), 4, (0.25, 4.0), 4).unwrap();
        let o = SolveOptions {
            tol: 1e-14,
            max_iterations: 5,
            ..SolveOptions::default()
        };
        match solve_value_iteration(&p, &g, &o) {
            Err(SolveError::NotConverged { iterations, partial, .. }) => {
                assert_eq!(iterations, 5);
                assert_eq!(partial.value.values().len(), 16);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
