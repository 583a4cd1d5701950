//! Feasible paths: simulation under a policy, the explicit constant paths
//! that make the value finite, discounted sums with tail bounds, and
//! growth/transversality diagnostics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, PathError};
use crate::primitives::{in_gamma, max_market_time, Direct, ModelParams, State, Technology};
use crate::solver::{PolicyField, ValueField};
use crate::utility::utility;
use crate::verify::compute_constants;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    /// Consumption.
    pub c: f64,
    /// Market time.
    pub u: f64,
    /// Study time.
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    /// `T + 1` states.
    pub states: Vec<State>,
    /// `T` controls; entry `t` moves `states[t]` to `states[t + 1]`.
    pub controls: Vec<Controls>,
    pub per_period_utility: Vec<f64>,
    /// Every consecutive pair lies in `Γ`.
    pub feasible: bool,
    /// Periods where the policy was evaluated outside its grid or had to
    /// be projected back into `Γ`.
    pub flagged: Vec<usize>,
}

impl Path {
    /// Controls and returns implied by a sequence of states.
    pub fn from_states(states: Vec<State>, params: &ModelParams) -> Result<Path, PathError> {
        if states.len() < 2 {
            return Err(PathError::Empty);
        }
        let tech = Direct::new(params);
        let t = params.theta.value();
        let mut controls = Vec::with_capacity(states.len() - 1);
        let mut utils = Vec::with_capacity(states.len() - 1);
        let mut feasible = true;
        for w in states.windows(2) {
            let (s, n) = (w[0], w[1]);
            if !s.is_valid() || !n.is_valid() {
                return Err(ModelError::Domain(format!("invalid state on path: {s:?} -> {n:?}")).into());
            }
            feasible &= in_gamma(s, n, params);
            let u = tech.market_time(s.h, n.h);
            let c = tech.consumption(s.k, s.h, n.k, n.h);
            controls.push(Controls { c, u, v: 1.0 - u });
            utils.push(if c < 0.0 { f64::NEG_INFINITY } else { utility(c, t) });
        }
        Ok(Path {
            states,
            controls,
            per_period_utility: utils,
            feasible,
            flagged: Vec::new(),
        })
    }

    /// Number of transitions `T`.
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }
}

/// A rule for choosing next period's state.
pub trait Policy {
    /// Next state and whether the choice had to be flagged.
    fn next_state(&self, s: State, params: &ModelParams) -> (State, bool);
}

impl Policy for PolicyField {
    fn next_state(&self, s: State, _params: &ModelParams) -> (State, bool) {
        self.eval(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum CapitalRule {
    /// `k' = k`.
    Hold,
    /// Invest this share of the resources left after production.
    Share { share: f64 },
}

/// Fixed market time and a simple capital rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcedControl {
    pub market_time: f64,
    pub capital: CapitalRule,
}

impl ForcedControl {
    pub fn new(market_time: f64, capital: CapitalRule) -> Result<Self, ModelError> {
        if !(0.0..=1.0).contains(&market_time) {
            return Err(ModelError::Domain(format!("market time {market_time} not in [0, 1]")));
        }
        if let CapitalRule::Share { share } = capital {
            if !(0.0..=1.0).contains(&share) {
                return Err(ModelError::Domain(format!("investment share {share} not in [0, 1]")));
            }
        }
        Ok(ForcedControl { market_time, capital })
    }

    /// Study time `v`, market time `1 - v`.
    pub fn study(v: f64, capital: CapitalRule) -> Result<Self, ModelError> {
        Self::new(1.0 - v, capital)
    }
}

impl Policy for ForcedControl {
    fn next_state(&self, s: State, p: &ModelParams) -> (State, bool) {
        let v = 1.0 - self.market_time;
        let h_next = (p.b * p.phi.eval(v) + (1.0 - p.delta_h)) * s.h;
        let k_next = match self.capital {
            CapitalRule::Hold => s.k,
            CapitalRule::Share { share } => {
                let y = Direct::new(p).output_scale(s.k, s.h) * self.market_time.powf(1.0 - p.alpha);
                share * (y + (1.0 - p.delta_k) * s.k) / (1.0 + p.n)
            }
        };
        (State::new(k_next, h_next), false)
    }
}

/// Rolls `policy` forward `horizon` periods. Choices outside `Γ` are
/// projected onto its upper corners and flagged.
pub fn simulate<P: Policy + ?Sized>(
    policy: &P,
    start: State,
    horizon: usize,
    params: &ModelParams,
) -> Result<Path, PathError> {
    if horizon == 0 {
        return Err(PathError::Empty);
    }
    if !(start.k > 0.0 && start.h > 0.0 && start.is_valid()) {
        return Err(PathError::StartOnAxis { k: start.k, h: start.h });
    }
    let tech = Direct::new(params);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut flagged = Vec::new();
    states.push(start);
    let mut s = start;
    for t in 0..horizon {
        let (mut n, mut flag) = policy.next_state(s, params);
        let (k_max, h_max) = tech.bounds(s.k, s.h);
        if !(n.k <= k_max && n.h <= h_max && n.k >= 0.0 && n.h >= 0.0) {
            n = State::new(n.k.clamp(0.0, k_max), n.h.clamp(0.0, h_max));
            flag = true;
        }
        if flag {
            flagged.push(t);
        }
        states.push(n);
        s = n;
    }
    let mut path = Path::from_states(states, params)?;
    path.flagged = flagged;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPathValue {
    /// `J` of the infinite path.
    pub value: f64,
    /// Its first `horizon` transitions.
    pub path: Path,
    /// False when the start satisfies the low-capital condition and the path
    /// is stationary from `t = 0`.
    pub two_phase: bool,
}

/// Capital level below which `u = ū` with constant `k` leaves positive
/// consumption: `(A ū^(1-α) h^(1-α+γ) / (n+δ_k))^(1/(1-α))`.
pub fn stationary_capital_threshold(h: f64, params: &ModelParams) -> Result<f64, ModelError> {
    let p = params;
    let u_bar = max_market_time(p)?;
    let scale = p.a * u_bar.powf(1.0 - p.alpha) * h.powf(1.0 - p.alpha + p.gamma);
    Ok((scale / (p.n + p.delta_k)).powf(1.0 / (1.0 - p.alpha)))
}

/// The explicit feasible path with `u_t = ū` (so `h_t = h_0`) and finite
/// value: stationary when `k_0` is below the threshold, otherwise one
/// adjustment step to `k_1 = k̄/2` followed by a stationary tail.
pub fn constant_path_value(
    start: State,
    params: &ModelParams,
    horizon: usize,
) -> Result<ConstantPathValue, PathError> {
    if !(start.k > 0.0 && start.h > 0.0 && start.is_valid()) {
        return Err(PathError::StartOnAxis { k: start.k, h: start.h });
    }
    if horizon == 0 {
        return Err(PathError::Empty);
    }
    let p = params;
    let u_bar = max_market_time(p)?;
    let (k0, h0) = (start.k, start.h);
    let threshold = stationary_capital_threshold(h0, p)?;
    let out = |k: f64| p.a * k.powf(p.alpha) * u_bar.powf(1.0 - p.alpha) * h0.powf(1.0 - p.alpha + p.gamma);
    let t = p.theta.value();

    let (k1, value, two_phase) = if k0 < threshold {
        let c0 = out(k0) - (p.n + p.delta_k) * k0;
        (k0, utility(c0, t) / (1.0 - p.beta), false)
    } else {
        let k_bar = ((out(k0) + (1.0 - p.delta_k) * k0) / (1.0 + p.n)).min(threshold);
        let k1 = 0.5 * k_bar;
        let c0 = out(k0) + (1.0 - p.delta_k) * k0 - (1.0 + p.n) * k1;
        let c1 = out(k1) - (p.n + p.delta_k) * k1;
        (k1, utility(c0, t) + p.beta / (1.0 - p.beta) * utility(c1, t), true)
    };
    let mut states = vec![start];
    states.extend(std::iter::repeat_n(State::new(k1, h0), horizon));
    if !two_phase {
        states[1] = start;
    }
    Ok(ConstantPathValue {
        value,
        path: Path::from_states(states, p)?,
        two_phase,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountedSum {
    /// `Σ_{t<T} β^t F_t`.
    pub partial: f64,
    /// Bound on the positive part of the remaining tail from the growth
    /// constants: `η(1+ζ)‖x_0‖(βζ)^T/(1-βζ)` with `T` transitions.
    pub upper_tail_bound: f64,
    /// Path-specific lower bound on the tail, valid if consumption never
    /// falls below its minimum so far: `β^T U(c_min)/(1-β)`.
    pub lower_tail_bound: f64,
}

pub fn discounted_sum(path: &Path, params: &ModelParams) -> Result<DiscountedSum, PathError> {
    if path.controls.is_empty() {
        return Err(PathError::Empty);
    }
    if let Some(t) = path.per_period_utility.iter().position(|u| *u == f64::NEG_INFINITY) {
        return Err(PathError::NegativeInfinity { period: t });
    }
    let beta = params.beta;
    let partial = discounted(&path.per_period_utility, beta);
    let k = compute_constants(params);
    let horizon = path.horizon() as i32;
    let x0 = path.states[0].norm();
    let bz = k.beta_zeta;
    let upper = if bz < 1.0 {
        k.eta * (1.0 + k.zeta) * x0 * bz.powi(horizon) / (1.0 - bz)
    } else {
        f64::INFINITY
    };
    let c_min = path.controls.iter().map(|c| c.c).fold(f64::INFINITY, f64::min);
    let lower = beta.powi(horizon) * utility(c_min, params.theta.value()) / (1.0 - beta);
    Ok(DiscountedSum {
        partial,
        upper_tail_bound: upper,
        lower_tail_bound: lower,
    })
}

/// `Σ β^t x_t`, accumulated in order.
fn discounted(xs: &[f64], beta: f64) -> f64 {
    let mut w = 1.0;
    let mut s = 0.0;
    for x in xs {
        s += w * x;
        w *= beta;
    }
    s
}

/// Value of the path under utility with curvature `θ - ε`, including the
/// tail `β^T U(c_min; θ-ε)/(1-β)`. Never exceeds the path's own value
/// because utility is nondecreasing in its curvature parameter.
pub fn shifted_lower_bound(path: &Path, params: &ModelParams, epsilon: f64) -> Result<f64, PathError> {
    let theta = params.theta.value();
    if theta > 0.0 {
        return Err(PathError::ThetaPositive { theta });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(PathError::Epsilon(epsilon));
    }
    if path.controls.is_empty() {
        return Err(PathError::Empty);
    }
    if let Some(t) = path.controls.iter().position(|c| !(c.c > 0.0)) {
        return Err(PathError::NegativeInfinity { period: t });
    }
    let shifted = theta - epsilon;
    let utils: Vec<f64> = path.controls.iter().map(|c| utility(c.c, shifted)).collect();
    let c_min = path.controls.iter().map(|c| c.c).fold(f64::INFINITY, f64::min);
    let beta = params.beta;
    let tail = beta.powi(path.horizon() as i32) * utility(c_min, shifted) / (1.0 - beta);
    Ok(discounted(&utils, beta) + tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthClass {
    SustainedGrowth,
    Degrowth,
    Stationary,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub g_k: Vec<f64>,
    pub g_h: Vec<f64>,
    pub g_c: Vec<f64>,
    pub classification: GrowthClass,
}

/// Relative threshold separating growth from stagnation.
pub const GROWTH_THRESHOLD: f64 = 1e-6;

/// Gross growth rates and a label decided by human capital over the last
/// quarter of the path; `stationary` also requires constant `k`.
pub fn growth_diagnostics(path: &Path) -> GrowthReport {
    let ratio = |a: f64, b: f64| b / a;
    let g_k: Vec<f64> = path.states.windows(2).map(|w| ratio(w[0].k, w[1].k)).collect();
    let g_h: Vec<f64> = path.states.windows(2).map(|w| ratio(w[0].h, w[1].h)).collect();
    let g_c: Vec<f64> = path.controls.windows(2).map(|w| ratio(w[0].c, w[1].c)).collect();
    let classification = if path.states.len() < 3 {
        GrowthClass::Mixed
    } else {
        let from = g_h.len() - (g_h.len() / 4).max(1);
        let tail_h = &g_h[from..];
        let tail_k = &g_k[from..];
        let flat = |g: &f64| (g - 1.0).abs() <= GROWTH_THRESHOLD;
        if tail_h.iter().all(|g| *g > 1.0 + GROWTH_THRESHOLD) {
            GrowthClass::SustainedGrowth
        } else if tail_h.iter().all(|g| *g < 1.0 - GROWTH_THRESHOLD) {
            GrowthClass::Degrowth
        } else if tail_h.iter().all(flat) && tail_k.iter().all(flat) {
            GrowthClass::Stationary
        } else {
            GrowthClass::Mixed
        }
    };
    GrowthReport {
        g_k,
        g_h,
        g_c,
        classification,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Holds,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    /// `β^t V(k_t, h_t)` for every state on the path.
    pub sequence: Vec<f64>,
    /// `limsup β^t V <= 0`, read off the final entry.
    pub s1: Condition,
    /// `β^t V -> 0` on paths with finite value.
    pub s2: Condition,
    /// First period from which `|β^t V|` stays below the tolerance.
    pub settled_at: Option<usize>,
}

pub const TRANSVERSALITY_TOL: f64 = 1e-4;

pub fn transversality_diagnostic(path: &Path, v: &ValueField, params: &ModelParams) -> TransversalityReport {
    let mut w = 1.0;
    let sequence: Vec<f64> = path
        .states
        .iter()
        .map(|s| {
            let x = w * v.eval_state(*s);
            w *= params.beta;
            x
        })
        .collect();
    if sequence.iter().any(|x| !x.is_finite()) {
        return TransversalityReport {
            sequence,
            s1: Condition::NotApplicable,
            s2: Condition::NotApplicable,
            settled_at: None,
        };
    }
    let last = *sequence.last().expect("paths have states");
    let s1 = if last <= TRANSVERSALITY_TOL {
        Condition::Holds
    } else {
        Condition::Violated
    };
    let finite_value = path.per_period_utility.iter().all(|u| u.is_finite());
    let s2 = match (finite_value, last.abs() <= TRANSVERSALITY_TOL) {
        (false, _) => Condition::NotApplicable,
        (true, true) => Condition::Holds,
        (true, false) => Condition::Violated,
    };
    let settled_at = (0..sequence.len())
        .find(|&t| sequence[t..].iter().all(|x| x.abs() < TRANSVERSALITY_TOL));
    TransversalityReport {
        sequence,
        s1,
        s2,
        settled_at,
    }
}

/// One row per state: `t, k, h, c, u, v, utility, beta_t_V`. Controls are
/// empty on the final row; the last column is empty without a value field.
pub fn write_path_csv<W: Write>(
    path: &Path,
    value: Option<&ValueField>,
    params: &ModelParams,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "k", "h", "c", "u", "v", "utility", "beta_t_V"])?;
    let mut disc = 1.0;
    for (t, s) in path.states.iter().enumerate() {
        let mut row = vec![t.to_string(), s.k.to_string(), s.h.to_string()];
        match path.controls.get(t) {
            Some(c) => {
                row.push(c.c.to_string());
                row.push(c.u.to_string());
                row.push(c.v.to_string());
                row.push(path.per_period_utility[t].to_string());
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(value.map(|v| (disc * v.eval_state(*s)).to_string()).unwrap_or_default());
        disc *= params.beta;
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
