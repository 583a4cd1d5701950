//! Technology, time allocation, the feasibility correspondence and the
//! one-period return, with and without the human-capital externality.
//!
//! Output per capita is `A k^α u^(1-α) h^(1-α+γ)`; human capital evolves as
//! `h' = (Bφ(v) + 1 - δ_h) h` with `u + v = 1`. Eliminating the controls
//! leaves a problem in `(k, h) -> (k', h')` alone: `ψ(h, h')` recovers the
//! market time and consumption is whatever output is not carried forward.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::utility::{utility, Theta};

/// Absolute slack on feasibility-boundary membership.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Learning technology `φ: [0,1] -> R+`, strictly increasing with `φ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhiSpec {
    /// `φ(v) = v`
    Linear,
    /// `φ(v) = v^σ`, `0 < σ <= 1`
    Power { sigma: f64 },
}

impl PhiSpec {
    #[inline]
    pub fn eval(self, v: f64) -> f64 {
        match self {
            PhiSpec::Linear => v,
            PhiSpec::Power { sigma } => v.powf(sigma),
        }
    }

    #[inline]
    pub fn inverse(self, y: f64) -> f64 {
        match self {
            PhiSpec::Linear => y,
            PhiSpec::Power { sigma } => y.powf(1.0 / sigma),
        }
    }

    fn validate(self) -> Result<(), ModelError> {
        match self {
            PhiSpec::Linear => Ok(()),
            PhiSpec::Power { sigma } if sigma > 0.0 && sigma <= 1.0 => Ok(()),
            PhiSpec::Power { sigma } => Err(ModelError::InvalidParameter {
                name: "phi.sigma",
                value: sigma,
                reason: "must lie in (0, 1]",
            }),
        }
    }
}

/// Structural parameters. Construct with struct-update syntax from
/// [`ModelParams::baseline`] and call [`ModelParams::validate`] before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Total factor productivity.
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Population growth rate.
    pub n: f64,
    pub delta_k: f64,
    pub delta_h: f64,
    /// Productivity of study time.
    pub b: f64,
    /// Externality exponent.
    pub gamma: f64,
    pub theta: Theta,
    pub phi: PhiSpec,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ModelParams {
    /// `A=1, α=0.3, β=0.8, n=0.02, δ_k=0.1, δ_h=0.05, B=0.1, γ=0, θ=0`, linear φ.
    pub const fn baseline() -> Self {
        ModelParams {
            a: 1.0,
            alpha: 0.3,
            beta: 0.8,
            n: 0.02,
            delta_k: 0.1,
            delta_h: 0.05,
            b: 0.1,
            gamma: 0.0,
            theta: Theta::LOG,
            phi: PhiSpec::Linear,
        }
    }

    pub fn with_theta(self, theta: f64) -> Result<Self, ModelError> {
        Ok(ModelParams {
            theta: Theta::new(theta)?,
            ..self
        })
    }

    /// Range checks on every field. H2 is not checked here; it is a model
    /// assumption reported by the verifier, see [`ModelParams::derived`].
    pub fn validate(&self) -> Result<(), ModelError> {
        fn bad(name: &'static str, value: f64, reason: &'static str) -> Result<(), ModelError> {
            Err(ModelError::InvalidParameter { name, value, reason })
        }
        let open01 = |x: f64| x > 0.0 && x < 1.0;
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("A", self.a, "must be positive");
        }
        if !open01(self.alpha) {
            return bad("alpha", self.alpha, "must lie in (0, 1)");
        }
        if !open01(self.beta) {
            return bad("beta", self.beta, "must lie in (0, 1)");
        }
        if !(self.n >= 0.0 && self.n.is_finite()) {
            return bad("n", self.n, "must be nonnegative");
        }
        if !open01(self.delta_k) {
            return bad("delta_k", self.delta_k, "must lie in (0, 1)");
        }
        if !open01(self.delta_h) {
            return bad("delta_h", self.delta_h, "must lie in (0, 1)");
        }
        if !(self.b > 0.0 && self.b.is_finite()) {
            return bad("B", self.b, "must be positive");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma, "must be nonnegative");
        }
        self.phi.validate()
    }

    /// `D_h = Bφ(1) + 1 - δ_h`.
    #[inline]
    pub fn max_human_growth(&self) -> f64 {
        self.b * self.phi.eval(1.0) + (1.0 - self.delta_h)
    }

    /// `ρ = (1 - α + γ)/(1 - α)`.
    #[inline]
    pub fn rho(&self) -> f64 {
        (1.0 - self.alpha + self.gamma) / (1.0 - self.alpha)
    }

    /// `ω = α/(1 + γ)`.
    #[inline]
    pub fn omega(&self) -> f64 {
        self.alpha / (1.0 + self.gamma)
    }

    /// Whether `Bφ(1) > δ_h`.
    pub fn h2_holds(&self) -> bool {
        self.max_human_growth() > 1.0
    }

    pub fn derived(&self) -> Result<DerivedConstants, ModelError> {
        let v_bar = critical_v(self)?;
        Ok(DerivedConstants {
            d_h: self.max_human_growth(),
            v_bar,
            u_bar: 1.0 - v_bar,
            rho: self.rho(),
            omega: self.omega(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub d_h: f64,
    pub v_bar: f64,
    pub u_bar: f64,
    pub rho: f64,
    pub omega: f64,
}

/// A point in the nonnegative quadrant: physical and human capital per capita.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub k: f64,
    pub h: f64,
}

impl State {
    pub const ORIGIN: State = State { k: 0.0, h: 0.0 };

    pub const fn new(k: f64, h: f64) -> Self {
        State { k, h }
    }

    pub fn is_valid(&self) -> bool {
        self.k >= 0.0 && self.h >= 0.0 && self.k.is_finite() && self.h.is_finite()
    }

    /// `k + h`
    #[inline]
    pub fn norm(&self) -> f64 {
        self.k + self.h
    }

    #[inline]
    pub fn scale(&self, lambda: f64) -> State {
        State::new(lambda * self.k, lambda * self.h)
    }
}

fn check_state(s: State) -> Result<(), ModelError> {
    if s.is_valid() {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("state ({}, {}) is not in R+^2", s.k, s.h)))
    }
}

/// Minimum study time `v̲` keeping human capital constant: `φ(v̲) = δ_h/B`.
pub fn critical_v(params: &ModelParams) -> Result<f64, ModelError> {
    let threshold = params.delta_h / params.b;
    let phi_one = params.phi.eval(1.0);
    if !(phi_one > threshold) {
        return Err(ModelError::NoMaintenanceTime { phi_one, threshold });
    }
    Ok(params.phi.inverse(threshold))
}

/// `ū = ψ(h, h) = 1 - v̲`.
pub fn max_market_time(params: &ModelParams) -> Result<f64, ModelError> {
    Ok(1.0 - critical_v(params)?)
}

/// Market time implied by the human-capital transition `h -> h_next`.
pub fn psi(h: f64, h_next: f64, params: &ModelParams) -> Result<f64, ModelError> {
    if !(h >= 0.0) || !(h_next >= 0.0) {
        return Err(ModelError::Domain(format!("psi needs h, h' >= 0, got ({h}, {h_next})")));
    }
    if h > 0.0 && h_next > params.max_human_growth() * h + FEASIBILITY_SLACK {
        return Err(ModelError::InfeasibleGrowth { h, h_next });
    }
    Ok(market_time(h, h_next, params))
}

#[inline]
pub(crate) fn market_time(h: f64, h_next: f64, p: &ModelParams) -> f64 {
    if h <= 0.0 {
        return 1.0;
    }
    let floor = 1.0 - p.delta_h;
    let ratio = h_next / h;
    if ratio <= floor {
        1.0
    } else {
        let study = p.phi.inverse((ratio - floor) / p.b);
        (1.0 - study).clamp(0.0, 1.0)
    }
}

/// `ĥ = h^ρ`.
pub fn hhat_transform(h: f64, params: &ModelParams) -> f64 {
    h.powf(params.rho())
}

/// `h = ĥ^(1/ρ)`.
pub fn hhat_inverse(hhat: f64, params: &ModelParams) -> f64 {
    hhat.powf(1.0 / params.rho())
}

/// Market time in transformed variables, where `ĥ' = (Bφ(v) + 1 - δ_h)^ρ ĥ`.
pub fn psi_rho(hhat: f64, hhat_next: f64, params: &ModelParams) -> Result<f64, ModelError> {
    if !(hhat >= 0.0) || !(hhat_next >= 0.0) {
        return Err(ModelError::Domain(format!(
            "psi_rho needs nonnegative arguments, got ({hhat}, {hhat_next})"
        )));
    }
    let cap = params.max_human_growth().powf(params.rho()) * hhat;
    if hhat > 0.0 && hhat_next > cap * (1.0 + 1e-12) + FEASIBILITY_SLACK {
        return Err(ModelError::InfeasibleGrowth {
            h: hhat,
            h_next: hhat_next,
        });
    }
    Ok(market_time_rho(hhat, hhat_next, params, params.rho()))
}

#[inline]
pub(crate) fn market_time_rho(hhat: f64, hhat_next: f64, p: &ModelParams, rho: f64) -> f64 {
    if hhat <= 0.0 {
        return 1.0;
    }
    let floor = 1.0 - p.delta_h;
    let ratio = hhat_next / hhat;
    if ratio <= floor.powf(rho) {
        1.0
    } else {
        let gross = ratio.powf(1.0 / rho);
        let study = p.phi.inverse((gross - floor) / p.b);
        (1.0 - study).clamp(0.0, 1.0)
    }
}

/// Upper corners of `Γ(k, h)`, a box `[0, k_max] x [0, h_max]`.
pub fn feasible_bounds(state: State, params: &ModelParams) -> (f64, f64) {
    Direct::new(params).bounds(state.k, state.h)
}

pub fn in_gamma(state: State, next: State, params: &ModelParams) -> bool {
    if !state.is_valid() || !next.is_valid() {
        return false;
    }
    let (k_max, h_max) = feasible_bounds(state, params);
    next.k <= k_max + FEASIBILITY_SLACK && next.h <= h_max + FEASIBILITY_SLACK
}

fn require_feasible(state: State, next: State, params: &ModelParams) -> Result<(), ModelError> {
    check_state(state)?;
    check_state(next)?;
    if in_gamma(state, next, params) {
        Ok(())
    } else {
        Err(ModelError::Infeasible {
            k: state.k,
            h: state.h,
            k_next: next.k,
            h_next: next.h,
        })
    }
}

/// Consumption left over by the transition. Negative values mean the
/// transition is in the box `Γ` but not affordable at the implied market
/// time; they are returned unclamped. On the axes the value is
/// `max{0, (1-δ_k)k - (1+n)k'}`.
pub fn consumption(state: State, next: State, params: &ModelParams) -> Result<f64, ModelError> {
    require_feasible(state, next, params)?;
    Ok(Direct::new(params).consumption(state.k, state.h, next.k, next.h))
}

/// One-period return `U(c)`; `-inf` whenever consumption is not positive
/// and utility is unbounded below, or consumption is negative.
pub fn return_f(state: State, next: State, params: &ModelParams) -> Result<f64, ModelError> {
    require_feasible(state, next, params)?;
    Ok(Direct::new(params).return_value(state.k, state.h, next.k, next.h))
}

/// `U(c)` with `-inf` for negative consumption.
#[inline]
pub(crate) fn utility_of_consumption(c: f64, theta: f64) -> f64 {
    if c < 0.0 {
        f64::NEG_INFINITY
    } else {
        utility(c, theta)
    }
}

/// The pieces of a model the solvers need. Consumption at an interior state
/// is `scale(k,h) u^(1-α) + (1-δ_k)k - (1+n)k'` with `u` from
/// [`Technology::market_time`].
pub trait Technology: Sync {
    fn params(&self) -> &ModelParams;
    /// Output at `u = 1`.
    fn output_scale(&self, k: f64, h: f64) -> f64;
    /// Largest one-period gross growth of the human-capital coordinate.
    fn max_growth(&self) -> f64;
    /// Gross growth of the human-capital coordinate at `v = 0`.
    fn depreciation_floor(&self) -> f64;
    fn market_time(&self, h: f64, h_next: f64) -> f64;
    /// True when `Γ` is a cone and the output is homogeneous of degree one.
    fn is_homogeneous(&self) -> bool;

    #[inline]
    fn bounds(&self, k: f64, h: f64) -> (f64, f64) {
        let p = self.params();
        let k_max = (self.output_scale(k, h) + (1.0 - p.delta_k) * k) / (1.0 + p.n);
        (k_max, self.max_growth() * h)
    }

    #[inline]
    fn consumption(&self, k: f64, h: f64, k_next: f64, h_next: f64) -> f64 {
        let p = self.params();
        if k <= 0.0 || h <= 0.0 {
            return ((1.0 - p.delta_k) * k - (1.0 + p.n) * k_next).max(0.0);
        }
        let u = self.market_time(h, h_next);
        self.output_scale(k, h) * u.powf(1.0 - p.alpha) + (1.0 - p.delta_k) * k
            - (1.0 + p.n) * k_next
    }

    #[inline]
    fn return_value(&self, k: f64, h: f64, k_next: f64, h_next: f64) -> f64 {
        let c = self.consumption(k, h, k_next, h_next);
        utility_of_consumption(c, self.params().theta.value())
    }
}

/// The model in its original variables, externality included.
#[derive(Debug, Clone, Copy)]
pub struct Direct<'a> {
    params: &'a ModelParams,
    exponent_h: f64,
    d_h: f64,
}

impl<'a> Direct<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        Direct {
            params,
            exponent_h: 1.0 - params.alpha + params.gamma,
            d_h: params.max_human_growth(),
        }
    }
}

impl Technology for Direct<'_> {
    fn params(&self) -> &ModelParams {
        self.params
    }

    #[inline]
    fn output_scale(&self, k: f64, h: f64) -> f64 {
        if k <= 0.0 || h <= 0.0 {
            return 0.0;
        }
        self.params.a * k.powf(self.params.alpha) * h.powf(self.exponent_h)
    }

    fn max_growth(&self) -> f64 {
        self.d_h
    }

    fn depreciation_floor(&self) -> f64 {
        1.0 - self.params.delta_h
    }

    #[inline]
    fn market_time(&self, h: f64, h_next: f64) -> f64 {
        market_time(h, h_next, self.params)
    }

    fn is_homogeneous(&self) -> bool {
        self.params.gamma == 0.0
    }
}

/// The externality model rewritten in `(k, ĥ)` with `ĥ = h^ρ`, where the
/// technology is again homogeneous of degree one.
#[derive(Debug, Clone, Copy)]
pub struct ChangeOfVariables<'a> {
    params: &'a ModelParams,
    rho: f64,
    growth: f64,
    floor: f64,
}

impl<'a> ChangeOfVariables<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let rho = params.rho();
        ChangeOfVariables {
            params,
            rho,
            growth: params.max_human_growth().powf(rho),
            floor: (1.0 - params.delta_h).powf(rho),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl Technology for ChangeOfVariables<'_> {
    fn params(&self) -> &ModelParams {
        self.params
    }

    #[inline]
    fn output_scale(&self, k: f64, hhat: f64) -> f64 {
        if k <= 0.0 || hhat <= 0.0 {
            return 0.0;
        }
        let a = self.params.alpha;
        self.params.a * k.powf(a) * hhat.powf(1.0 - a)
    }

    fn max_growth(&self) -> f64 {
        self.growth
    }

    fn depreciation_floor(&self) -> f64 {
        self.floor
    }

    #[inline]
    fn market_time(&self, hhat: f64, hhat_next: f64) -> f64 {
        market_time_rho(hhat, hhat_next, self.params, self.rho)
    }

    fn is_homogeneous(&self) -> bool {
        true
    }
}
