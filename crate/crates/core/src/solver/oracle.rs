//! Brute-force backward induction, kept apart from the value-iteration
//! maximizer so the two can check each other.

use rayon::prelude::*;

use crate::error::SolveError;
use crate::primitives::{psi, ModelParams};
use crate::utility::utility;

use super::grid::{GridSpec, ValueField};
use super::iterate::check_discount;

/// Value of the `T`-period truncated problem at every node.
///
/// `V_0` is the best one-period return; `V_t = max F + β V_{t-1}` with the
/// maximum taken over a uniform `lattice x lattice` sample of the box
/// `[0, k_max] x [0, h_max]`, plus the no-study `h'`, with `V_{t-1}`
/// interpolated on `grid`.
pub fn finite_horizon_oracle(
    params: &ModelParams,
    grid: &GridSpec,
    horizon: usize,
    lattice: usize,
) -> Result<ValueField, SolveError> {
    check_discount(params)?;
    grid.validate()?;
    if lattice < 2 {
        return Err(SolveError::Options(format!("lattice needs at least 2 points, got {lattice}")));
    }
    let p = *params;
    let theta = p.theta.value();
    let exp_h = 1.0 - p.alpha + p.gamma;
    let d_h = p.max_human_growth();

    let stage = |next: Option<&ValueField>| -> Vec<f64> {
        (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let s = grid.node(idx);
                let (k, h) = (s.k, s.h);
                let y_full = p.a * k.powf(p.alpha) * h.powf(exp_h);
                let carry = (1.0 - p.delta_k) * k;
                let k_top = (y_full + carry) / (1.0 + p.n);
                let h_top = d_h * h;
                let mut best = f64::NEG_INFINITY;
                let mut hs: Vec<f64> = (0..lattice).map(|j| h_top * j as f64 / (lattice - 1) as f64).collect();
                // Full-time work: the kink of psi, usually where the optimum sits.
                hs.push((1.0 - p.delta_h) * h);
                for hn in hs {
                    let u = psi(h, hn.min(h_top), &p).expect("lattice point inside the box");
                    let resources = y_full * u.powf(1.0 - p.alpha) + carry;
                    let row_base = next.map(|v| (v, hn));
                    for i in 0..lattice {
                        let kn = k_top * i as f64 / (lattice - 1) as f64;
                        let c = resources - (1.0 + p.n) * kn;
                        if c < 0.0 {
                            break;
                        }
                        let f = utility(c, theta);
                        if f == f64::NEG_INFINITY {
                            continue;
                        }
                        let total = match row_base {
                            Some((v, hn)) => f + p.beta * v.eval(kn, hn),
                            None => f,
                        };
                        if total > best {
                            best = total;
                        }
                    }
                }
                best
            })
            .collect()
    };

    let mut v = ValueField::new(grid.clone(), stage(None))?;
    for _ in 0..horizon {
        v = ValueField::new(grid.clone(), stage(Some(&v)))?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::log_spaced((0.25, 4.0), 5, (0.25, 4.0), 5).unwrap()
    }

    #[test]
    fn zero_horizon_is_one_period_max() {
        let g = grid();
        let v = finite_horizon_oracle(&ModelParams::baseline(), &g, 0, 200).unwrap();
        assert!((v.at_node(2, 2) - 1.9f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn one_more_period_adds_at_least_the_worst_continuation() {
        let p = ModelParams::baseline().with_theta(0.5).unwrap();
        let g = grid();
        let v0 = finite_horizon_oracle(&p, &g, 0, 60).unwrap();
        let v1 = finite_horizon_oracle(&p, &g, 1, 60).unwrap();
        let floor = v0.values().iter().copied().fold(f64::INFINITY, f64::min);
        for (a, b) in v0.values().iter().zip(v1.values()) {
            assert!(*b >= a + p.beta * floor - 1e-12);
        }
    }
}
