use proptest::prelude::*;

use crate::paths::{constant_path_value, discounted_sum, shifted_lower_bound, simulate, CapitalRule, ForcedControl};
use crate::primitives::{feasible_bounds, hhat_inverse, hhat_transform, in_gamma, psi, psi_rho, return_f};
use crate::utility::{eval_utility, scale_decomposition};
use crate::verify::compute_constants;
use crate::verify::means::{power_mean, WeightedSample};
use crate::{ModelParams, State, Theta, UtilityForm};

fn u(c: f64, t: f64) -> f64 {
    eval_utility(c, Theta::new(t).unwrap(), UtilityForm::Standard).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn sample() -> impl Strategy<Value = WeightedSample> {
    prop::collection::vec((log_uniform(1e-3, 1e3), log_uniform(1e-2, 1e2)), 1..12).prop_map(|xw| {
        let (x, w) = xw.into_iter().unzip();
        WeightedSample::new(x, w).unwrap()
    })
}

/// A state and a transition drawn uniformly from its feasible box.
fn transition(p: ModelParams) -> impl Strategy<Value = (State, State)> {
    (log_uniform(1e-2, 1e2), log_uniform(1e-2, 1e2), 0.0..=1.0f64, 0.0..=1.0f64).prop_map(move |(k, h, a, b)| {
        let s = State::new(k, h);
        let (k_max, h_max) = feasible_bounds(s, &p);
        (s, State::new(a * k_max, b * h_max))
    })
}

fn theta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), -5.0..1.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn utility_nondecreasing_in_theta(c in log_uniform(1e-3, 1e3), a in -5.0..1.0f64, b in -5.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(u(c, lo) <= u(c, hi) + 1e-12 * (1.0 + u(c, hi).abs()));
    }

    #[test]
    fn utility_below_linear(c in log_uniform(1e-3, 1e3), t in theta()) {
        prop_assert!(u(c, t) <= c - 1.0 + 1e-12 * c);
    }

    #[test]
    fn utility_scale_decomposition(c in log_uniform(1e-3, 1e3), l in 1e-3..=1.0f64, t in theta()) {
        let th = Theta::new(t).unwrap();
        let (p1, p2) = scale_decomposition(l, th).unwrap();
        // The two terms can be huge and cancel; measure against their size.
        let (lhs, a, b) = (u(l * c, t), p1 * u(c, t), p2);
        prop_assert!((lhs - (a + b)).abs() <= 1e-12 * (1.0 + lhs.abs() + a.abs() + b.abs()));
    }

    #[test]
    fn power_means_increase_in_p(s in sample(), a in -20.0..20.0f64, b in -20.0..20.0f64) {
        let (p, q) = if a <= b { (a, b) } else { (b, a) };
        let (mp, mq) = (power_mean(&s, p).unwrap(), power_mean(&s, q).unwrap());
        prop_assert!(mp <= mq * (1.0 + 1e-12), "M_{p} = {mp} > M_{q} = {mq}");
    }

    #[test]
    fn geometric_below_arithmetic(s in sample()) {
        prop_assert!(power_mean(&s, 0.0).unwrap() <= power_mean(&s, 1.0).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn cobb_douglas_below_weighted_sum(k in log_uniform(1e-3, 1e3), h in log_uniform(1e-3, 1e3), alpha in 0.01..0.99f64) {
        let s = WeightedSample::new(vec![k, h], vec![alpha, 1.0 - alpha]).unwrap();
        let gm = power_mean(&s, 0.0).unwrap();
        prop_assert!(close(gm, k.powf(alpha) * h.powf(1.0 - alpha), 1e-12));
        prop_assert!(gm <= (alpha * k + (1.0 - alpha) * h) * (1.0 + 1e-12));
    }

    #[test]
    fn psi_is_scale_free(h in log_uniform(1e-3, 1e3), share in 0.0..=1.0f64, l in 1e-2..1e2f64) {
        let p = ModelParams::baseline();
        let hn = share * p.max_human_growth() * h;
        prop_assert!(close(psi(h, hn, &p).unwrap(), psi(l * h, l * hn, &p).unwrap(), 1e-12));
    }

    #[test]
    fn transformed_psi_matches(h in log_uniform(1e-2, 1e2), share in 0.0..=1.0f64, gamma in 0.0..=1.0f64) {
        let p = ModelParams { gamma, ..ModelParams::baseline() };
        let hn = share * p.max_human_growth() * h;
        let (a, b) = (hhat_transform(h, &p), hhat_transform(hn, &p));
        prop_assert!(close(hhat_inverse(a, &p), h, 1e-12));
        prop_assert!(close(psi_rho(a, b, &p).unwrap(), psi(h, hn, &p).unwrap(), 1e-10));
    }

    #[test]
    fn feasible_set_is_a_cone((s, n) in transition(ModelParams::baseline()), l in 1e-2..=1.0f64) {
        let p = ModelParams::baseline();
        prop_assert!(in_gamma(s, n, &p));
        prop_assert!(in_gamma(s.scale(l), n.scale(l), &p));
    }

    #[test]
    fn growth_bound_without_externality((s, n) in transition(ModelParams::baseline()), t in theta()) {
        let p = ModelParams::baseline().with_theta(t).unwrap();
        let r = compute_constants(&p);
        prop_assert!(n.k.max(n.h) <= r.zeta * s.norm() * (1.0 + 1e-12));
        let f = return_f(s, n, &p).unwrap();
        prop_assert!(f <= r.eta * (s.norm() + n.norm()) * (1.0 + 1e-12));
    }

    #[test]
    fn return_scales_exactly_without_externality((s, n) in transition(ModelParams::baseline()), l in 1e-2..=1.0f64, t in theta()) {
        let p = ModelParams::baseline().with_theta(t).unwrap();
        let f = return_f(s, n, &p).unwrap();
        prop_assume!(f.is_finite());
        let (p1, p2) = scale_decomposition(l, p.theta).unwrap();
        prop_assert!(close(return_f(s.scale(l), n.scale(l), &p).unwrap(), p1 * f + p2, 1e-9));
    }

    #[test]
    fn zeta_dominates_max_growth(alpha in 0.05..0.95f64, gamma in 0.0..2.0f64, b in 0.06..0.5f64) {
        let p = ModelParams { alpha, gamma, b, ..ModelParams::baseline() };
        let r = compute_constants(&p);
        prop_assert!(r.zeta >= r.d_h && r.d_h > 1.0);
    }

    #[test]
    fn externality_relaxes_discount_bound(alpha in 0.05..0.95f64, gamma in 0.0..2.0f64) {
        let p0 = ModelParams { alpha, ..ModelParams::baseline() };
        let p1 = ModelParams { gamma, ..p0 };
        let (r0, r1) = (compute_constants(&p0), compute_constants(&p1));
        prop_assert!(r1.omega <= alpha);
        // Capital branch of ξ, evaluated at the effective share.
        let branch = |share: f64| (share * p0.a + 1.0 - p0.delta_k) / (1.0 + p0.n);
        prop_assert!(branch(r1.omega) <= branch(alpha));
        prop_assume!(r0.zeta == branch(alpha) && r1.zeta == branch(r1.omega));
        prop_assert!(1.0 / r1.zeta >= 1.0 / r0.zeta);
    }

    #[test]
    fn forced_paths_stay_feasible(k in log_uniform(1e-2, 1e2), h in log_uniform(1e-2, 1e2), v in 0.0..=1.0f64, share in 0.0..=1.0f64) {
        let p = ModelParams::baseline();
        let rule = ForcedControl::study(v, CapitalRule::Share { share }).unwrap();
        let path = simulate(&rule, State::new(k, h), 30, &p).unwrap();
        prop_assert!(path.feasible && path.flagged.is_empty());
        for (c, w) in path.controls.iter().zip(path.states.windows(2)) {
            prop_assert!((c.u + c.v - 1.0).abs() <= 1e-12);
            prop_assert!(in_gamma(w[0], w[1], &p));
        }
    }

    #[test]
    fn stationary_truncation_is_exact(k in 0.05..5.0f64, horizon in 1usize..200, t in -2.0..=0.0f64) {
        let p = ModelParams::baseline().with_theta(t).unwrap();
        let c = constant_path_value(State::new(k, 1.0), &p, horizon).unwrap();
        prop_assume!(!c.two_phase);
        let d = discounted_sum(&c.path, &p).unwrap();
        let u0 = c.path.per_period_utility[0];
        let slack = u0.abs() * p.beta.powi(horizon as i32) / (1.0 - p.beta);
        prop_assert!((d.partial - c.value).abs() <= slack * (1.0 + 1e-9) + 1e-12);
        let shifted = shifted_lower_bound(&c.path, &p, 0.5).unwrap();
        prop_assert!(shifted <= c.value + 1e-12 * (1.0 + c.value.abs()));
    }
}
