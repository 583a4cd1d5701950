//! Inner maximization over the feasibility box: lattice scan, then local
//! refinement around the best lattice point.

use crate::primitives::{utility_of_consumption, Technology};

use super::InnerSearch;

/// Interpolated continuation value, queried along rows of fixed `h'`.
pub(crate) trait Continuation: Sync {
    type Row;
    fn row(&self, h_next: f64) -> Self::Row;
    fn value(&self, row: &Self::Row, k_next: f64) -> f64;

    /// Kinks of `value` along a row sit at `scale * nodes[i]`.
    fn k_breaks(&self, _row: &Self::Row) -> (f64, &[f64]) {
        (1.0, &[])
    }

    /// `h'` values where rows switch interpolation cells.
    fn h_breaks(&self) -> &[f64] {
        &[]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Choice {
    pub value: f64,
    pub k_next: f64,
    pub h_next: f64,
}

impl Choice {
    const WORST: Choice = Choice {
        value: f64::NEG_INFINITY,
        k_next: f64::INFINITY,
        h_next: f64::INFINITY,
    };

    /// Strictly better: higher value, then smaller `k'`, then smaller `h'`.
    #[inline]
    fn beats(&self, other: &Choice) -> bool {
        if self.value != other.value {
            return self.value > other.value;
        }
        if self.k_next != other.k_next {
            return self.k_next < other.k_next;
        }
        self.h_next < other.h_next
    }
}

struct Slice<R> {
    h_next: f64,
    /// Resources before investment: output plus undepreciated capital.
    avail: f64,
    /// Largest affordable `k'`.
    cap: f64,
    row: R,
}

struct Objective<'a, T, C> {
    tech: &'a T,
    cont: &'a C,
    h: f64,
    scale: f64,
    carry: f64,
    grow: f64,
    beta: f64,
    theta: f64,
    labour: f64,
    degenerate: bool,
    k_max: f64,
}

impl<'a, T: Technology, C: Continuation> Objective<'a, T, C> {
    fn new(tech: &'a T, cont: &'a C, k: f64, h: f64) -> Self {
        let p = tech.params();
        let (k_max, _) = tech.bounds(k, h);
        Objective {
            tech,
            cont,
            h,
            scale: tech.output_scale(k, h),
            carry: (1.0 - p.delta_k) * k,
            grow: 1.0 + p.n,
            beta: p.beta,
            theta: p.theta.value(),
            labour: 1.0 - p.alpha,
            degenerate: k <= 0.0 || h <= 0.0,
            k_max,
        }
    }

    fn slice(&self, h_next: f64) -> Slice<C::Row> {
        let avail = if self.degenerate {
            self.carry
        } else {
            let u = self.tech.market_time(self.h, h_next);
            self.scale * u.powf(self.labour) + self.carry
        };
        Slice {
            h_next,
            avail,
            cap: (avail / self.grow).clamp(0.0, self.k_max),
            row: self.cont.row(h_next),
        }
    }

    #[inline]
    fn eval(&self, s: &Slice<C::Row>, k_next: f64) -> Choice {
        let mut c = s.avail - self.grow * k_next;
        if self.degenerate {
            c = c.max(0.0);
        }
        let u = utility_of_consumption(c, self.theta);
        let value = if u == f64::NEG_INFINITY {
            u
        } else {
            u + self.beta * self.cont.value(&s.row, k_next)
        };
        Choice {
            value,
            k_next,
            h_next: s.h_next,
        }
    }

    /// Best `k'` over the interpolation cells meeting `[lo, hi]` shares of
    /// the slice's cap.
    fn inner(&self, s: &Slice<C::Row>, lo: f64, hi: f64, iterations: usize) -> Choice {
        let (scale, nodes) = self.cont.k_breaks(&s.row);
        let pts = cells(lo * s.cap, hi * s.cap, (0.0, s.cap), scale, nodes, None);
        piecewise_golden(&pts, iterations, |k| self.eval(s, k))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

/// Golden-section search for a maximum on `[lo, hi]`. Returns the best
/// point evaluated; ties go to the smaller argument via [`Choice::beats`].
fn golden(lo: f64, hi: f64, iterations: usize, mut f: impl FnMut(f64) -> Choice) -> Choice {
    if !(hi > lo) {
        return f(lo);
    }
    const R: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - R * (b - a);
    let mut d = a + R * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd.beats(&fc) { fd } else { fc };
    for _ in 0..iterations {
        if fd.beats(&fc) {
            a = c;
            c = d;
            fc = fd;
            d = a + R * (b - a);
            fd = f(d);
            if fd.beats(&best) {
                best = fd;
            }
        } else {
            b = d;
            d = c;
            fd = fc;
            c = b - R * (b - a);
            fc = f(c);
            if fc.beats(&best) {
                best = fc;
            }
        }
    }
    best
}

/// Breakpoints covering `[lo, hi]` widened to whole cells of the
/// interpolant, clipped to `dom`. Cells are `scale * nodes[i]` apart.
fn cells(lo: f64, hi: f64, dom: (f64, f64), scale: f64, nodes: &[f64], extra: Option<f64>) -> Vec<f64> {
    let below = nodes.partition_point(|&x| scale * x <= lo);
    let a = if below > 0 { (scale * nodes[below - 1]).max(dom.0) } else { dom.0 };
    let above = nodes.partition_point(|&x| scale * x < hi);
    let b = if above < nodes.len() { (scale * nodes[above]).min(dom.1) } else { dom.1 };
    let mut pts = vec![a];
    pts.extend(nodes.iter().map(|&x| scale * x).filter(|&x| x > a && x < b));
    pts.push(b);
    if let Some(e) = extra.filter(|&e| e > a && e < b) {
        let at = pts.partition_point(|&x| x < e);
        if pts[at] != e {
            pts.insert(at, e);
        }
    }
    pts
}

/// Golden section on each cell between consecutive breakpoints, plus the
/// breakpoints themselves, where the objective is typically kinked.
fn piecewise_golden(pts: &[f64], iterations: usize, mut f: impl FnMut(f64) -> Choice) -> Choice {
    let mut best = Choice::WORST;
    for &x in pts {
        let c = f(x);
        if c.beats(&best) {
            best = c;
        }
    }
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let c = golden(w[0], w[1], iterations, &mut f);
            if c.beats(&best) {
                best = c;
            }
        }
    }
    best
}

/// Maximizes `F(k,h,k',h') + β·cont(k',h')` over `Γ(k,h)`.
pub(crate) fn maximize<T: Technology, C: Continuation>(
    tech: &T,
    cont: &C,
    k: f64,
    h: f64,
    search: InnerSearch,
    points: usize,
) -> Choice {
    let obj = Objective::new(tech, cont, k, h);
    let (_, h_max) = tech.bounds(k, h);
    let points = points.max(3);

    let mut hs: Vec<f64> = linspace(0.0, h_max, points).collect();
    let kink = tech.depreciation_floor() * h;
    if kink > 0.0 && kink < h_max {
        let at = hs.partition_point(|&x| x < kink);
        if hs[at] != kink {
            hs.insert(at, kink);
        }
    }
    let shares: Vec<f64> = linspace(0.0, 1.0, points).collect();

    let ns = shares.len();
    let mut table = Vec::with_capacity(hs.len() * ns);
    for &hn in &hs {
        let s = obj.slice(hn);
        table.extend(shares.iter().map(|&share| obj.eval(&s, share * s.cap)));
    }
    let best = table
        .iter()
        .copied()
        .fold(Choice::WORST, |a, c| if c.beats(&a) { c } else { a });
    if best.value == f64::NEG_INFINITY {
        return best;
    }

    // The objective need not be unimodal (interpolated continuation values
    // are flat below the grid), so refine around every strict local maximum
    // of the lattice, best first, up to a few seeds.
    let at = |j: usize, i: usize| &table[j * ns + i];
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    for j in 0..hs.len() {
        for i in 0..ns {
            let c = at(j, i);
            if !c.value.is_finite() {
                continue;
            }
            let mut local = true;
            'nb: for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (jj, ii) = (j as i64 + dj, i as i64 + di);
                    if (dj, di) == (0, 0) || jj < 0 || ii < 0 || jj >= hs.len() as i64 || ii >= ns as i64 {
                        continue;
                    }
                    if at(jj as usize, ii as usize).beats(c) {
                        local = false;
                        break 'nb;
                    }
                }
            }
            if local {
                seeds.push((j, i));
            }
        }
    }
    seeds.sort_by(|a, b| {
        let (x, y) = (at(a.0, a.1), at(b.0, b.1));
        if x.beats(y) {
            std::cmp::Ordering::Less
        } else if y.beats(x) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    seeds.truncate(MAX_SEEDS);

    let mut result = best;
    for (bj, bi) in seeds {
        let refined = refine(&obj, &hs, &shares, bj, bi, *at(bj, bi), search, points);
        if refined.beats(&result) {
            result = refined;
        }
    }
    result
}

/// Local maxima of the lattice refined per call to [`maximize`].
const MAX_SEEDS: usize = 3;

#[allow(clippy::too_many_arguments)]
fn refine<T: Technology, C: Continuation>(
    obj: &Objective<'_, T, C>,
    hs: &[f64],
    shares: &[f64],
    bj: usize,
    bi: usize,
    start: Choice,
    search: InnerSearch,
    points: usize,
) -> Choice {
    let h_lo = hs[bj.saturating_sub(1)];
    let h_hi = hs[(bj + 1).min(hs.len() - 1)];
    let s_lo = shares[bi.saturating_sub(1)];
    let s_hi = shares[(bi + 1).min(shares.len() - 1)];

    match search {
        InnerSearch::GoldenSectionNested { iterations } => {
            let at_lattice = obj.inner(&obj.slice(hs[bj]), s_lo, s_hi, iterations);
            let kink = obj.tech.depreciation_floor() * obj.h;
            let pts = cells(h_lo, h_hi, (0.0, hs[hs.len() - 1]), 1.0, obj.cont.h_breaks(), Some(kink));
            let moved = piecewise_golden(&pts, iterations, |hn| {
                obj.inner(&obj.slice(hn), s_lo, s_hi, iterations)
            });
            if moved.beats(&at_lattice) {
                moved
            } else {
                at_lattice
            }
        }
        InnerSearch::GridRefinement { levels } => {
            let (mut h_lo, mut h_hi, mut s_lo, mut s_hi) = (h_lo, h_hi, s_lo, s_hi);
            let mut zoom = start;
            for _ in 0..levels {
                let hz: Vec<f64> = linspace(h_lo, h_hi, points).collect();
                let sz: Vec<f64> = linspace(s_lo, s_hi, points).collect();
                let (mut zj, mut zi) = (0, 0);
                let mut level_best = Choice::WORST;
                for (j, &hn) in hz.iter().enumerate() {
                    let s = obj.slice(hn);
                    for (i, &share) in sz.iter().enumerate() {
                        let c = obj.eval(&s, share * s.cap);
                        if c.beats(&level_best) {
                            level_best = c;
                            zj = j;
                            zi = i;
                        }
                    }
                }
                if level_best.beats(&zoom) {
                    zoom = level_best;
                }
                h_lo = hz[zj.saturating_sub(1)];
                h_hi = hz[(zj + 1).min(points - 1)];
                s_lo = sz[zi.saturating_sub(1)];
                s_hi = sz[(zi + 1).min(points - 1)];
            }
            zoom
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{Direct, ModelParams};

    struct Zero;
    impl Continuation for Zero {
        type Row = ();
        fn row(&self, _: f64) {}
        fn value(&self, _: &(), _: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn golden_finds_interior_max() {
        let c = golden(0.0, 3.0, 60, |x| Choice {
            value: -(x - 1.234).powi(2),
            k_next: x,
            h_next: 0.0,
        });
        assert!((c.k_next - 1.234).abs() < 1e-8);
    }

    #[test]
    fn golden_handles_kinks() {
        let c = golden(0.0, 2.0, 60, |x| Choice {
            value: -(x - 0.95).abs(),
            k_next: x,
            h_next: 0.0,
        });
        assert!((c.k_next - 0.95).abs() < 1e-8);
    }

    #[test]
    fn one_period_max_is_eating_everything() {
        let p = ModelParams::baseline();
        let t = Direct::new(&p);
        for search in [
            InnerSearch::GoldenSectionNested { iterations: 40 },
            InnerSearch::GridRefinement { levels: 8 },
        ] {
            let c = maximize(&t, &Zero, 1.0, 1.0, search, 17);
            assert!((c.value - 1.9f64.ln()).abs() < 1e-12, "{c:?}");
            assert_eq!(c.k_next, 0.0);
            // Smallest h' among the ties is h' = 0.
            assert_eq!(c.h_next, 0.0);
        }
    }

    #[test]
    fn origin_has_no_finite_choice() {
        let p = ModelParams::baseline();
        let c = maximize(&Direct::new(&p), &Zero, 0.0, 0.0, InnerSearch::default(), 9);
        assert_eq!(c.value, f64::NEG_INFINITY);
    }
}
