use rayon::prelude::*;

use crate::error::SolveError;
use crate::primitives::{Direct, ModelParams, Technology};

use super::grid::{PolicyField, Row, ValueField};
use super::search::{maximize, Choice, Continuation};
use super::SolveOptions;

/// Result of one application of the Bellman operator.
#[derive(Debug, Clone)]
pub struct Backup {
    pub value: ValueField,
    pub policy: PolicyField,
    /// Nodes where no transition attains a finite value.
    pub non_finite: Vec<usize>,
    /// Maximizers that left the grid hull.
    pub clipped: usize,
}

struct GridContinuation<'a>(&'a ValueField);

impl Continuation for GridContinuation<'_> {
    type Row = Row;

    #[inline]
    fn row(&self, h_next: f64) -> Row {
        self.0.row(h_next)
    }

    #[inline]
    fn value(&self, row: &Row, k_next: f64) -> f64 {
        self.0.eval_row(row, k_next)
    }

    fn k_breaks(&self, _: &Row) -> (f64, &[f64]) {
        (1.0, &self.0.grid().k_nodes)
    }

    fn h_breaks(&self) -> &[f64] {
        &self.0.grid().h_nodes
    }
}

/// `(TV)(k,h) = sup_{Γ(k,h)} F + β V`, node by node.
pub fn bellman_backup(
    v: &ValueField,
    params: &ModelParams,
    options: &SolveOptions,
) -> Result<Backup, SolveError> {
    params.validate()?;
    options.validate()?;
    Ok(backup_with(&Direct::new(params), v, options))
}

pub(crate) fn backup_with<T: Technology>(tech: &T, v: &ValueField, options: &SolveOptions) -> Backup {
    let grid = v.grid();
    let cont = GridContinuation(v);
    let choices: Vec<Choice> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let s = grid.node(idx);
            maximize(tech, &cont, s.k, s.h, options.inner_search, options.inner_points)
        })
        .collect();
    assemble(tech, grid.clone(), &choices, |c| !grid.contains(crate::primitives::State::new(c.k_next, c.h_next)))
}

/// Packs per-node choices into value and policy fields.
pub(crate) fn assemble<T: Technology>(
    tech: &T,
    grid: super::GridSpec,
    choices: &[Choice],
    clipped: impl Fn(&Choice) -> bool,
) -> Backup {
    let n = grid.len();
    let mut policy = PolicyField {
        grid: grid.clone(),
        k_next: Vec::with_capacity(n),
        h_next: Vec::with_capacity(n),
        consumption: Vec::with_capacity(n),
        market_time: Vec::with_capacity(n),
        study_time: Vec::with_capacity(n),
    };
    let mut non_finite = Vec::new();
    let mut clip_count = 0;
    for (idx, c) in choices.iter().enumerate() {
        let s = grid.node(idx);
        let (kn, hn) = if c.value == f64::NEG_INFINITY {
            non_finite.push(idx);
            (0.0, 0.0)
        } else {
            if clipped(c) {
                clip_count += 1;
            }
            (c.k_next, c.h_next)
        };
        let u = tech.market_time(s.h, hn);
        policy.k_next.push(kn);
        policy.h_next.push(hn);
        policy.consumption.push(tech.consumption(s.k, s.h, kn, hn));
        policy.market_time.push(u);
        policy.study_time.push(1.0 - u);
    }
    let values = choices.iter().map(|c| c.value).collect();
    Backup {
        value: ValueField::new(grid, values).expect("grid already validated"),
        policy,
        non_finite,
        clipped: clip_count,
    }
}
