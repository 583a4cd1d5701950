use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::primitives::State;

/// Node layout for the 2-D solve, plus the 1-D `x = k/h` axis used by the
/// homogeneity-reduced solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_nodes: Vec<f64>,
    pub h_nodes: Vec<f64>,
    pub ratio_nodes: Vec<f64>,
}

pub const MIN_NODES: usize = 4;

/// `n` points from `lo` to `hi`, equally spaced in `log`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else if i == 0 {
                lo
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn check_axis(name: &str, nodes: &[f64]) -> Result<(), SolveError> {
    if nodes.len() < MIN_NODES {
        return Err(SolveError::Grid(format!(
            "{name} needs at least {MIN_NODES} nodes, got {}",
            nodes.len()
        )));
    }
    if nodes.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(SolveError::Grid(format!("{name} nodes must be positive and finite")));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::Grid(format!("{name} nodes must be strictly increasing")));
    }
    Ok(())
}

impl GridSpec {
    /// Log-spaced axes; the ratio axis spans `[k_lo/h_hi, k_hi/h_lo]` with
    /// 64 nodes.
    pub fn log_spaced(k: (f64, f64), nk: usize, h: (f64, f64), nh: usize) -> Result<Self, SolveError> {
        let grid = GridSpec {
            k_nodes: log_space(k.0, k.1, nk),
            h_nodes: log_space(h.0, h.1, nh),
            ratio_nodes: log_space(k.0 / h.1, k.1 / h.0, 64),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_ratio_nodes(mut self, lo: f64, hi: f64, n: usize) -> Result<Self, SolveError> {
        self.ratio_nodes = log_space(lo, hi, n);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        check_axis("k axis", &self.k_nodes)?;
        check_axis("h axis", &self.h_nodes)?;
        check_axis("ratio axis", &self.ratio_nodes)
    }

    pub fn nk(&self) -> usize {
        self.k_nodes.len()
    }

    pub fn nh(&self) -> usize {
        self.h_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.nk() * self.nh()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index; `k` varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nk() + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nk(), idx / self.nk())
    }

    #[inline]
    pub fn node(&self, idx: usize) -> State {
        let (i, j) = self.coords(idx);
        State::new(self.k_nodes[i], self.h_nodes[j])
    }

    /// True when the node is at least `margin` nodes away from every edge.
    pub fn is_interior(&self, idx: usize, margin: usize) -> bool {
        let (i, j) = self.coords(idx);
        i >= margin && j >= margin && i + margin < self.nk() && j + margin < self.nh()
    }

    pub fn contains(&self, s: State) -> bool {
        let (k0, k1) = (self.k_nodes[0], self.k_nodes[self.nk() - 1]);
        let (h0, h1) = (self.h_nodes[0], self.h_nodes[self.nh() - 1]);
        s.k >= k0 && s.k <= k1 && s.h >= h0 && s.h <= h1
    }

    /// Maps the `h` axis through `f`, e.g. `h -> h^ρ`.
    pub fn map_h(&self, f: impl Fn(f64) -> f64) -> GridSpec {
        GridSpec {
            k_nodes: self.k_nodes.clone(),
            h_nodes: self.h_nodes.iter().map(|&h| f(h)).collect(),
            ratio_nodes: self.ratio_nodes.clone(),
        }
    }
}

/// A sorted axis with cached logarithms. Lookups clamp to the hull.
#[derive(Debug, Clone)]
pub(crate) struct Axis {
    logs: Vec<f64>,
}

/// Cell position along an axis: left node and weight of the right node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Cell {
    pub i: usize,
    pub w: f64,
}

impl Axis {
    pub fn new(nodes: &[f64]) -> Self {
        Axis {
            logs: nodes.iter().map(|x| x.ln()).collect(),
        }
    }

    #[inline]
    pub fn locate_log(&self, lx: f64) -> Cell {
        let n = self.logs.len();
        let (lo, hi) = (self.logs[0], self.logs[n - 1]);
        if !(lx > lo) {
            return Cell { i: 0, w: 0.0 };
        }
        if lx >= hi {
            return Cell { i: n - 2, w: 1.0 };
        }
        let i = self.logs.partition_point(|&v| v <= lx) - 1;
        let i = i.min(n - 2);
        let w = (lx - self.logs[i]) / (self.logs[i + 1] - self.logs[i]);
        Cell { i, w }
    }

    #[inline]
    pub fn locate(&self, x: f64) -> Cell {
        self.locate_log(x.ln())
    }
}

#[inline]
fn lerp(a: f64, b: f64, w: f64) -> f64 {
    if w == 0.0 {
        a
    } else if w == 1.0 {
        b
    } else {
        a + w * (b - a)
    }
}

/// Bilinear interpolation where a `-inf` corner owns the quarter of the
/// cell nearest to it and the other quarters use the finite corners only.
#[inline]
pub(crate) fn bilinear(v: [f64; 4], wk: f64, wh: f64) -> f64 {
    let [v00, v10, v01, v11] = v;
    if v.iter().all(|x| x.is_finite()) {
        return lerp(lerp(v00, v10, wk), lerp(v01, v11, wk), wh);
    }
    let nearest = match (wk >= 0.5, wh >= 0.5) {
        (false, false) => v00,
        (true, false) => v10,
        (false, true) => v01,
        (true, true) => v11,
    };
    if !nearest.is_finite() {
        return f64::NEG_INFINITY;
    }
    let weights = [(1.0 - wk) * (1.0 - wh), wk * (1.0 - wh), (1.0 - wk) * wh, wk * wh];
    let (mut num, mut den) = (0.0, 0.0);
    for (x, w) in v.iter().zip(weights) {
        if x.is_finite() {
            num += w * x;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        nearest
    }
}

/// Value function approximation on a [`GridSpec`], interpolated bilinearly
/// in `(log k, log h)` and clamped to the grid hull outside it.
#[derive(Debug, Clone)]
pub struct ValueField {
    grid: GridSpec,
    values: Vec<f64>,
    k_axis: Axis,
    h_axis: Axis,
}

/// Precomputed `h` position for repeated lookups along one row.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Row {
    cell: Cell,
}

impl ValueField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, SolveError> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(SolveError::Grid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let k_axis = Axis::new(&grid.k_nodes);
        let h_axis = Axis::new(&grid.h_nodes);
        Ok(ValueField {
            grid,
            values,
            k_axis,
            h_axis,
        })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Result<Self, SolveError> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at_node(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    #[inline]
    pub(crate) fn row(&self, h: f64) -> Row {
        Row {
            cell: self.h_axis.locate(h),
        }
    }

    #[inline]
    pub(crate) fn eval_row(&self, row: &Row, k: f64) -> f64 {
        let ck = self.k_axis.locate(k);
        let nk = self.grid.nk();
        let base = row.cell.i * nk + ck.i;
        let v = [
            self.values[base],
            self.values[base + 1],
            self.values[base + nk],
            self.values[base + nk + 1],
        ];
        bilinear(v, ck.w, row.cell.w)
    }

    /// Interpolated value; arguments outside the hull are clamped to it.
    pub fn eval(&self, k: f64, h: f64) -> f64 {
        self.eval_row(&self.row(h), k)
    }

    pub fn eval_state(&self, s: State) -> f64 {
        self.eval(s.k, s.h)
    }

    /// Values with `-inf` (or anything below `floor`) replaced by `floor`.
    /// For display only.
    pub fn floored(&self, floor: f64) -> Vec<f64> {
        self.values.iter().map(|&v| v.max(floor)).collect()
    }
}

/// Maximizing transition at every node and the controls it implies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyField {
    pub grid: GridSpec,
    pub k_next: Vec<f64>,
    pub h_next: Vec<f64>,
    pub consumption: Vec<f64>,
    /// `u = ψ(h, h')`
    pub market_time: Vec<f64>,
    /// `v = 1 - u`
    pub study_time: Vec<f64>,
}

impl PolicyField {
    /// Bilinearly interpolated `(k', h')` at `s`; the flag is set when `s`
    /// lies outside the grid hull.
    pub fn eval(&self, s: State) -> (State, bool) {
        let inside = self.grid.contains(s);
        let ck = Axis::new(&self.grid.k_nodes).locate(s.k);
        let ch = Axis::new(&self.grid.h_nodes).locate(s.h);
        let nk = self.grid.nk();
        let base = ch.i * nk + ck.i;
        let pick = |f: &[f64]| {
            let v = [f[base], f[base + 1], f[base + nk], f[base + nk + 1]];
            bilinear(v, ck.w, ch.w)
        };
        (State::new(pick(&self.k_next), pick(&self.h_next)), !inside)
    }
}
