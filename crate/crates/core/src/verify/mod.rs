//! Constants of the existence theory and sampled checks of the model
//! assumptions.

pub mod means;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::paths::{constant_path_value, discounted_sum, shifted_lower_bound};
use crate::primitives::{
    critical_v, feasible_bounds, in_gamma, Direct, ModelParams, State, Technology,
};
use crate::utility::{externality_scale_decomposition, scale_decomposition};

pub use means::{power_mean, WeightedSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Verdict {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    fn na(detail: impl Into<String>) -> Self {
        Verdict {
            status: Status::NotApplicable,
            detail: detail.into(),
        }
    }
}

/// Which continuity assumption carries the existence argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContinuityMode {
    /// Scaling argument, available for `γ <= 1`.
    A6,
    /// Explicit lower-bound function, for any `γ`.
    A7,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub d_h: f64,
    /// `None` when `Bφ(1) <= δ_h`.
    pub v_bar: Option<f64>,
    pub u_bar: Option<f64>,
    pub xi: f64,
    pub xi_hat: f64,
    pub zeta: f64,
    pub beta_zeta: f64,
    pub rho: f64,
    pub omega: f64,
    /// `η = ζ(1+n)`
    pub eta: f64,
    pub verdicts: BTreeMap<String, Verdict>,
    pub continuity_mode: ContinuityMode,
}

/// `max{(αA + 1-δ_k)/(1+n), (1-α)A/(1+n)}` for a given capital share.
fn xi_with(share: f64, p: &ModelParams) -> f64 {
    let a = (share * p.a + 1.0 - p.delta_k) / (1.0 + p.n);
    let b = (1.0 - share) * p.a / (1.0 + p.n);
    a.max(b)
}

/// Derived constants; verdicts are left empty.
pub fn compute_constants(params: &ModelParams) -> AssumptionReport {
    let p = params;
    let d_h = p.max_human_growth();
    let v_bar = critical_v(p).ok();
    let xi = xi_with(p.alpha, p);
    let xi_hat = xi_with(p.omega(), p);
    let growth = if p.gamma == 0.0 { xi } else { xi_hat };
    let zeta = growth.max(d_h);
    AssumptionReport {
        d_h,
        v_bar,
        u_bar: v_bar.map(|v| 1.0 - v),
        xi,
        xi_hat,
        zeta,
        beta_zeta: p.beta * zeta,
        rho: p.rho(),
        omega: p.omega(),
        eta: zeta * (1.0 + p.n),
        verdicts: BTreeMap::new(),
        continuity_mode: if p.gamma <= 1.0 {
            ContinuityMode::A6
        } else {
            ContinuityMode::A7
        },
    }
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| v.status == Status::Fail)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn status(&self, name: &str) -> Option<Status> {
        self.verdicts.get(name).map(|v| v.status)
    }

    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.6}"));
        let mut s = String::new();
        let _ = writeln!(s, "D_h       = {:.6}", self.d_h);
        let _ = writeln!(s, "v_bar     = {}", opt(self.v_bar));
        let _ = writeln!(s, "u_bar     = {}", opt(self.u_bar));
        let _ = writeln!(s, "xi        = {:.6}", self.xi);
        let _ = writeln!(s, "xi_hat    = {:.6}", self.xi_hat);
        let _ = writeln!(s, "zeta      = {:.6}", self.zeta);
        let _ = writeln!(s, "beta*zeta = {:.6}", self.beta_zeta);
        let _ = writeln!(s, "eta       = {:.6}", self.eta);
        let _ = writeln!(s, "rho       = {:.6}", self.rho);
        let _ = writeln!(s, "omega     = {:.6}", self.omega);
        let _ = writeln!(s, "continuity via {:?}", self.continuity_mode);
        for (name, v) in &self.verdicts {
            let tag = match v.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::NotApplicable => "n/a ",
            };
            let _ = writeln!(s, "[{tag}] {name}: {}", v.detail);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Violation counts from randomized transitions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTally {
    pub transitions: usize,
    pub growth_bound: usize,
    pub return_bound: usize,
    pub cone_checked: usize,
    pub cone: usize,
    pub scaling_checked: usize,
    pub scaling: usize,
    pub kink_continuity: usize,
    /// Worst relative excess over the growth bound, with its transition.
    pub worst_growth: Option<(f64, [f64; 4])>,
    pub worst_return: Option<(f64, [f64; 4])>,
}

impl SampleTally {
    fn merge(mut self, o: SampleTally) -> SampleTally {
        self.transitions += o.transitions;
        self.growth_bound += o.growth_bound;
        self.return_bound += o.return_bound;
        self.cone_checked += o.cone_checked;
        self.cone += o.cone;
        self.scaling_checked += o.scaling_checked;
        self.scaling += o.scaling;
        self.kink_continuity += o.kink_continuity;
        self.worst_growth = worse(self.worst_growth, o.worst_growth);
        self.worst_return = worse(self.worst_return, o.worst_return);
        self
    }
}

fn worse(a: Option<(f64, [f64; 4])>, b: Option<(f64, [f64; 4])>) -> Option<(f64, [f64; 4])> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.0 > x.0 { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Scales used by the cone and scaling checks.
pub const SAMPLE_LAMBDAS: [f64; 3] = [0.3, 0.7, 1.0];
/// States are drawn log-uniformly from this range on both axes.
pub const SAMPLE_RANGE: (f64, f64) = (1e-3, 1e3);
const BATCH: usize = 4096;

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    let (lo, hi) = (SAMPLE_RANGE.0.ln(), SAMPLE_RANGE.1.ln());
    rng.gen_range(lo..hi).exp()
}

/// Draws `count` transitions uniformly from `Γ(s)` at log-uniform states
/// and counts violations of the growth bound, the return bound, cone
/// membership and the return scaling inequality. Batches run in parallel
/// on independent streams, so the result depends only on `seed`.
pub fn sample_transitions(params: &ModelParams, count: usize, seed: u64) -> SampleTally {
    let k = compute_constants(params);
    let p = *params;
    let batches = count.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = BATCH.min(count - b * BATCH);
            sample_batch(&p, &k, n, &mut rng)
        })
        .reduce(SampleTally::default, SampleTally::merge)
}

fn sample_batch(p: &ModelParams, k: &AssumptionReport, n: usize, rng: &mut ChaCha8Rng) -> SampleTally {
    let tech = Direct::new(p);
    let theta = p.theta;
    let mut t = SampleTally::default();
    for _ in 0..n {
        let s = State::new(log_uniform(rng), log_uniform(rng));
        let (k_max, h_max) = feasible_bounds(s, p);
        let nx = State::new(rng.gen_range(0.0..=k_max), rng.gen_range(0.0..=h_max));
        let key = [s.k, s.h, nx.k, nx.h];
        t.transitions += 1;

        let bound = k.zeta * s.norm();
        let excess = nx.k.max(nx.h) / bound - 1.0;
        if excess > 1e-12 {
            t.growth_bound += 1;
            t.worst_growth = worse(t.worst_growth, Some((excess, key)));
        }

        let f = tech.return_value(s.k, s.h, nx.k, nx.h);
        let cap = k.eta * (s.norm() + nx.norm());
        if f > cap * (1.0 + 1e-12) {
            t.return_bound += 1;
            t.worst_return = worse(t.worst_return, Some(((f - cap) / cap, key)));
        }

        for &lambda in &SAMPLE_LAMBDAS {
            let (ls, ln) = (s.scale(lambda), nx.scale(lambda));
            if p.gamma <= 1.0 {
                t.cone_checked += 1;
                if !in_gamma(ls, ln, p) {
                    t.cone += 1;
                }
            }
            if !f.is_finite() || !in_gamma(ls, ln, p) {
                continue;
            }
            let scaled = tech.return_value(ls.k, ls.h, ln.k, ln.h);
            let (phi1, phi2) = if p.gamma == 0.0 {
                scale_decomposition(lambda, theta).expect("lambda in (0, 1]")
            } else {
                externality_scale_decomposition(lambda, theta, p.gamma).expect("lambda in (0, 1]")
            };
            let rhs = phi1 * f + phi2;
            let tol = 1e-9 * (1.0 + rhs.abs());
            t.scaling_checked += 1;
            let bad = if p.gamma == 0.0 {
                // Exact identity when consumption stays positive.
                !((scaled - rhs).abs() <= tol)
            } else {
                !(scaled >= rhs - tol)
            };
            if bad {
                t.scaling += 1;
            }
        }

        // Continuity of the return across the kink of ψ.
        let kink = (1.0 - p.delta_h) * s.h;
        let (a, b) = (kink * (1.0 - 1e-10), (kink * (1.0 + 1e-10)).min(h_max));
        let kn = 0.25 * nx.k.min(k_max);
        let (fa, fb) = (tech.return_value(s.k, s.h, kn, a), tech.return_value(s.k, s.h, kn, b));
        if fa.is_finite() && fb.is_finite() && (fa - fb).abs() > 1e-6 * (1.0 + fa.abs()) {
            t.kink_continuity += 1;
        }
    }
    t
}

fn describe(n: usize, of: usize, what: &str, worst: Option<(f64, [f64; 4])>) -> String {
    let mut s = format!("{n}/{of} sampled transitions violate {what}");
    if let Some((e, [k, h, kn, hn])) = worst {
        let _ = write!(s, "; worst relative excess {e:.3e} at ({k:.4e}, {h:.4e}) -> ({kn:.4e}, {hn:.4e})");
    }
    s
}

/// Every checkable assumption, with sampled checks on `sample_count`
/// transitions drawn from `seed`.
pub fn check_all(params: &ModelParams, sample_count: usize, seed: u64) -> AssumptionReport {
    let p = params;
    let mut r = compute_constants(p);
    let bz = r.beta_zeta;
    let mut put = |name: &str, v: Verdict| {
        r.verdicts.insert(name.to_string(), v);
    };

    // H1: φ(0) = 0 and strictly increasing on a fine grid.
    let n = 10_000;
    let ys: Vec<f64> = (0..=n).map(|i| p.phi.eval(i as f64 / n as f64)).collect();
    let monotone = ys.windows(2).all(|w| w[1] > w[0]);
    put(
        "H1",
        Verdict::new(
            ys[0] == 0.0 && monotone,
            format!("phi(0) = {}, strictly increasing on {} grid points: {monotone}", ys[0], n + 1),
        ),
    );

    let threshold = p.delta_h / p.b;
    let phi_one = p.phi.eval(1.0);
    put(
        "H2",
        Verdict::new(
            phi_one > threshold,
            format!("phi(1) = {phi_one} vs delta_h/B = {threshold}"),
        ),
    );

    put(
        "betacond",
        Verdict::new(bz < 1.0, format!("beta*zeta = {bz:.6} (must be < 1)")),
    );

    let origin = feasible_bounds(State::ORIGIN, p);
    put(
        "A1",
        Verdict::new(
            origin == (0.0, 0.0),
            format!("Gamma(0,0) has upper corner {origin:?}; (0,0) is always feasible"),
        ),
    );

    let tally = sample_transitions(p, sample_count, seed);
    let m = tally.transitions;
    put(
        "A2",
        Verdict::new(
            tally.growth_bound == 0,
            describe(tally.growth_bound, m, "max(k',h') <= zeta (k+h)", tally.worst_growth),
        ),
    );
    put(
        "A3",
        Verdict::new(
            tally.return_bound == 0,
            describe(tally.return_bound, m, "F <= eta (|s| + |s'|)", tally.worst_return),
        ),
    );
    put(
        "A5",
        Verdict::new(
            tally.kink_continuity == 0,
            format!("{}/{m} returns jump across h' = (1-delta_h) h", tally.kink_continuity),
        ),
    );
    if p.gamma <= 1.0 {
        put(
            "A6_cone",
            Verdict::new(
                tally.cone == 0,
                format!(
                    "{}/{} scaled transitions (lambda in {:?}) leave Gamma",
                    tally.cone, tally.cone_checked, SAMPLE_LAMBDAS
                ),
            ),
        );
        let what = if p.gamma == 0.0 {
            "F(lambda s) = lambda^theta F(s) + U(lambda)"
        } else {
            "F(lambda s) >= Phi1(lambda) F(s) + Phi2(lambda)"
        };
        put(
            "A6_scaling",
            Verdict::new(
                tally.scaling == 0,
                format!("{}/{} finite scaled returns violate {what}", tally.scaling, tally.scaling_checked),
            ),
        );
    } else {
        put("A6_cone", Verdict::na(format!("gamma = {} > 1", p.gamma)));
        put("A6_scaling", Verdict::na(format!("gamma = {} > 1", p.gamma)));
    }

    put("A7", check_a7(p, seed));
    r
}

/// A7 along concrete paths: the origin is absorbing with return `-inf`,
/// and from sampled starts the constant path has finite value bounded
/// below by the shifted-utility sum.
fn check_a7(p: &ModelParams, seed: u64) -> Verdict {
    let theta = p.theta.value();
    if theta > 0.0 {
        return Verdict::na(format!("theta = {theta} > 0: returns are bounded below by -1/theta"));
    }
    if critical_v(p).is_err() {
        return Verdict::new(false, "no maintenance time, constant paths undefined");
    }
    let f00 = Direct::new(p).return_value(0.0, 0.0, 0.0, 0.0);
    if f00 != f64::NEG_INFINITY {
        return Verdict::new(false, format!("F(0,0,0,0) = {f00}, expected -inf"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA7);
    let starts = 64;
    let mut bad = 0;
    for _ in 0..starts {
        let s = State::new(log_uniform(&mut rng), log_uniform(&mut rng));
        let ok = constant_path_value(s, p, 200)
            .ok()
            .and_then(|c| {
                let d = discounted_sum(&c.path, p).ok()?;
                let lb = shifted_lower_bound(&c.path, p, 0.5).ok()?;
                Some(c.value.is_finite() && lb.is_finite() && lb <= d.partial + d.lower_tail_bound + 1e-9)
            })
            .unwrap_or(false);
        if !ok {
            bad += 1;
        }
    }
    Verdict::new(
        bad == 0,
        format!("F(0,0,0,0) = -inf; shifted bound finite and below J on {}/{starts} constant paths", starts - bad),
    )
}
