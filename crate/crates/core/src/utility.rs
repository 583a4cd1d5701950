//! Isoelastic utility.
//!
//! The standard family is `U(c) = (c^θ - 1)/θ` for `θ <= 1, θ != 0` and
//! `log c` at `θ = 0`. It solves `U'' + (1-θ)/c U' = 0` with `U(1) = 0`,
//! `U'(1) = 1`, and is continuous and nondecreasing in `θ` for every fixed
//! `c > 0`. The alternative form drops the additive constant.
//!
//! Values live on the extended real line: `-inf` is represented by
//! `f64::NEG_INFINITY` and IEEE arithmetic already propagates it through
//! sums with finite numbers and orders it below every finite value.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Curvature parameter of the isoelastic family; always `<= 1` and finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Theta(f64);

impl Theta {
    pub const LOG: Theta = Theta(0.0);

    pub fn new(value: f64) -> Result<Self, ModelError> {
        if !value.is_finite() || value > 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "theta",
                value,
                reason: "must be finite and at most 1",
            });
        }
        Ok(Theta(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_log(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for Theta {
    type Error = ModelError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Theta::new(value)
    }
}

impl From<Theta> for f64 {
    fn from(t: Theta) -> f64 {
        t.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityForm {
    /// `(c^θ - 1)/θ`
    #[default]
    Standard,
    /// `c^θ/θ`
    Alternative,
}

/// Standard-form utility without the domain check. Negative `c` is the
/// caller's problem.
#[inline]
pub(crate) fn utility(c: f64, theta: f64) -> f64 {
    if theta == 0.0 {
        c.ln()
    } else if theta == 1.0 {
        c - 1.0
    } else {
        // exp_m1 keeps (c^θ - 1)/θ accurate as θ -> 0.
        (theta * c.ln()).exp_m1() / theta
    }
}

pub fn eval_utility(c: f64, theta: Theta, form: UtilityForm) -> Result<f64, ModelError> {
    if c.is_nan() || c < 0.0 {
        return Err(ModelError::Domain(format!("consumption must be >= 0, got {c}")));
    }
    let t = theta.value();
    Ok(match form {
        UtilityForm::Standard => utility(c, t),
        UtilityForm::Alternative if t == 0.0 => c.ln(),
        UtilityForm::Alternative => c.powf(t) / t,
    })
}

/// `U'(c) = c^(θ-1)`; identical for both forms.
pub fn marginal_utility(c: f64, theta: Theta) -> Result<f64, ModelError> {
    if c.is_nan() || c <= 0.0 {
        return Err(ModelError::Domain(format!("marginal utility needs c > 0, got {c}")));
    }
    Ok(c.powf(theta.value() - 1.0))
}

fn check_lambda(lambda: f64) -> Result<(), ModelError> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::Domain(format!("lambda must lie in (0, 1], got {lambda}")))
    }
}

/// `(λ^θ, U(λ))`, so that `U(λc) = λ^θ U(c) + U(λ)`.
pub fn scale_decomposition(lambda: f64, theta: Theta) -> Result<(f64, f64), ModelError> {
    check_lambda(lambda)?;
    let t = theta.value();
    Ok((lambda.powf(t), utility(lambda, t)))
}

/// `(λ^((1+γ)θ), U(λ^(1+γ)))`, the lower-bound pair for the return function
/// with a human-capital externality of size `γ`.
pub fn externality_scale_decomposition(
    lambda: f64,
    theta: Theta,
    gamma: f64,
) -> Result<(f64, f64), ModelError> {
    check_lambda(lambda)?;
    if !(gamma >= 0.0) {
        return Err(ModelError::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let t = theta.value();
    let scaled = lambda.powf(1.0 + gamma);
    Ok((lambda.powf((1.0 + gamma) * t), utility(scaled, t)))
}

/// Finite-difference residual of `U'' + (1-θ)/c U'` at `c`.
///
/// Uses fourth-order central stencils with spacing `step * c`.
pub fn bvp_residual(c: f64, theta: Theta, step: f64) -> Result<f64, ModelError> {
    if !(c > 0.0) || !(step > 0.0) {
        return Err(ModelError::Domain(format!(
            "bvp residual needs c > 0 and step > 0, got c = {c}, step = {step}"
        )));
    }
    let t = theta.value();
    let dx = step * c;
    if c - 2.0 * dx <= 0.0 {
        return Err(ModelError::Domain(format!("step {step} too large for c = {c}")));
    }
    let u = |x: f64| utility(x, t);
    let (m2, m1, z, p1, p2) = (u(c - 2.0 * dx), u(c - dx), u(c), u(c + dx), u(c + 2.0 * dx));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dx);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * dx * dx);
    Ok(d2 + (1.0 - t) / c * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn th(v: f64) -> Theta {
        Theta::new(v).unwrap()
    }

    #[test]
    fn theta_rejects_above_one_and_nan() {
        assert!(Theta::new(1.0000001).is_err());
        assert!(Theta::new(f64::NAN).is_err());
        assert!(Theta::new(f64::NEG_INFINITY).is_err());
        assert!(Theta::new(1.0).is_ok());
        assert!(Theta::new(-40.0).is_ok());
    }

    #[test]
    fn utility_examples() {
        let std = UtilityForm::Standard;
        let alt = UtilityForm::Alternative;
        assert_eq!(eval_utility(1.0, th(0.7), std).unwrap(), 0.0);
        assert!((eval_utility(4.0, th(0.5), std).unwrap() - 2.0).abs() < 1e-15);
        assert!((eval_utility(4.0, th(0.5), alt).unwrap() - 4.0).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((eval_utility(e, Theta::LOG, std).unwrap() - 1.0).abs() < 1e-15);
        assert!((eval_utility(e, Theta::LOG, alt).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(eval_utility(0.0, th(-1.0), std).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn utility_at_zero() {
        let std = UtilityForm::Standard;
        assert_eq!(eval_utility(0.0, Theta::LOG, std).unwrap(), f64::NEG_INFINITY);
        assert_eq!(eval_utility(0.0, th(0.5), std).unwrap(), -2.0);
        assert_eq!(eval_utility(0.0, th(1.0), std).unwrap(), -1.0);
        assert_eq!(
            eval_utility(0.0, th(-2.0), UtilityForm::Alternative).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(eval_utility(-1e-9, th(0.5), std).is_err());
    }

    #[test]
    fn marginal_examples() {
        assert!((marginal_utility(1.0, th(0.3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((marginal_utility(4.0, th(0.5)).unwrap() - 0.5).abs() < 1e-15);
        assert!((marginal_utility(2.0, Theta::LOG).unwrap() - 0.5).abs() < 1e-15);
        assert!(marginal_utility(0.0, th(0.3)).is_err());
    }

    #[test]
    fn scale_decomposition_examples() {
        for t in [-3.0, 0.0, 0.4, 1.0] {
            assert_eq!(scale_decomposition(1.0, th(t)).unwrap(), (1.0, 0.0));
        }
        let (p1, p2) = scale_decomposition(0.25, th(0.5)).unwrap();
        assert!((p1 - 0.5).abs() < 1e-15 && (p2 + 1.0).abs() < 1e-15);
        let u4 = eval_utility(4.0, th(0.5), UtilityForm::Standard).unwrap();
        assert!((p1 * u4 + p2).abs() < 1e-15);
        let (p1, p2) = scale_decomposition(0.5, Theta::LOG).unwrap();
        assert_eq!(p1, 1.0);
        assert!((p2 - 0.5f64.ln()).abs() < 1e-15);
        assert!(scale_decomposition(0.0, Theta::LOG).is_err());
        assert!(scale_decomposition(1.5, Theta::LOG).is_err());
    }

    #[test]
    fn externality_decomposition_examples() {
        assert_eq!(externality_scale_decomposition(1.0, th(-1.0), 0.35).unwrap(), (1.0, 0.0));
        let (p1, p2) = externality_scale_decomposition(0.5, Theta::LOG, 1.0).unwrap();
        assert_eq!(p1, 1.0);
        assert!((p2 - 0.25f64.ln()).abs() < 1e-15);
        let (p1, p2) = externality_scale_decomposition(0.5, th(1.0), 1.0).unwrap();
        assert!((p1 - 0.25).abs() < 1e-15 && (p2 + 0.75).abs() < 1e-15);
        assert!(externality_scale_decomposition(0.0, th(1.0), 1.0).is_err());
    }

    #[test]
    fn bvp_residual_examples() {
        assert!(bvp_residual(1.0, Theta::LOG, 1e-4).unwrap().abs() < 1e-6);
        assert!(bvp_residual(2.0, th(0.5), 1e-4).unwrap().abs() < 1e-6);
        assert!(bvp_residual(3.0, th(-2.0), 1e-4).unwrap().abs() < 1e-6);
        assert!(bvp_residual(0.0, th(0.5), 1e-4).is_err());
        assert!(bvp_residual(1.0, th(0.5), 0.0).is_err());
    }

    #[test]
    fn bvp_residual_against_analytic_derivatives() {
        // U' = c^(θ-1), U'' = (θ-1) c^(θ-2) substituted by hand.
        let (c, t) = (3.0f64, -2.0f64);
        let d1 = c.powf(t - 1.0);
        let d2 = (t - 1.0) * c.powf(t - 2.0);
        assert!((d2 + (1.0 - t) / c * d1).abs() < 1e-15);
        let fd = bvp_residual(c, th(t), 1e-4).unwrap();
        assert!((fd - (d2 + (1.0 - t) / c * d1)).abs() < 1e-6);
    }

    #[test]
    fn log_limit() {
        for &c in &[0.01, 0.5, 1.0, 7.0, 100.0] {
            let u = eval_utility(c, th(1e-8), UtilityForm::Standard).unwrap();
            assert!((u - f64::ln(c)).abs() <= 1e-6);
        }
    }
}
