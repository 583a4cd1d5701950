//! CSV and JSON serialization of solve artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! `-inf` appears literally and every value reloads bit for bit.

use std::io::{Read, Write};

use crate::error::SolveError;

use super::grid::{log_space, GridSpec, PolicyField, ValueField};
use super::{Diagnostics, SolveResult};

pub const POLICY_HEADER: [&str; 8] = ["k", "h", "V", "k_next", "h_next", "c", "u", "v"];

fn io_err(e: impl std::fmt::Display) -> SolveError {
    SolveError::Grid(format!("i/o: {e}"))
}

pub fn write_value_csv<W: Write>(v: &ValueField, out: W) -> Result<(), SolveError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "h", "V"]).map_err(io_err)?;
    let g = v.grid();
    for idx in 0..g.len() {
        let s = g.node(idx);
        w.write_record([s.k.to_string(), s.h.to_string(), v.values()[idx].to_string()])
            .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// One row per node: `k, h, V, k', h', c, u, v`.
pub fn write_policy_csv<W: Write>(value: &ValueField, policy: &PolicyField, out: W) -> Result<(), SolveError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(POLICY_HEADER).map_err(io_err)?;
    let g = value.grid();
    for idx in 0..g.len() {
        let s = g.node(idx);
        let row = [
            s.k,
            s.h,
            value.values()[idx],
            policy.k_next[idx],
            policy.h_next[idx],
            policy.consumption[idx],
            policy.market_time[idx],
            policy.study_time[idx],
        ];
        w.write_record(row.iter().map(|x| x.to_string())).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_result_csv<W: Write>(result: &SolveResult, out: W) -> Result<(), SolveError> {
    write_policy_csv(&result.value, &result.policy, out)
}

pub fn write_diagnostics_json<W: Write>(d: &Diagnostics, out: W) -> Result<(), SolveError> {
    serde_json::to_writer_pretty(out, d).map_err(io_err)
}

fn parse(field: &str) -> Result<f64, SolveError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| SolveError::Grid(format!("not a number: {field:?}")))
}

/// Reads a file written by [`write_policy_csv`]. Rows may come in any order
/// but must cover a full tensor grid.
pub fn read_policy_csv<R: Read>(input: R) -> Result<(ValueField, PolicyField), SolveError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(io_err)?.clone();
    if header.iter().collect::<Vec<_>>() != POLICY_HEADER {
        return Err(SolveError::Grid(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io_err)?;
        let vals = rec.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        if vals.len() != POLICY_HEADER.len() {
            return Err(SolveError::Grid(format!("row has {} fields", vals.len())));
        }
        rows.push(vals);
    }
    let axis = |col: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[col]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let (ks, hs) = (axis(0), axis(1));
    if ks.is_empty() || hs.is_empty() {
        return Err(SolveError::Grid("policy file has no rows".into()));
    }
    let grid = GridSpec {
        ratio_nodes: log_space(ks[0] / hs[hs.len() - 1], ks[ks.len() - 1] / hs[0], 64),
        k_nodes: ks,
        h_nodes: hs,
    };
    grid.validate()?;
    if rows.len() != grid.len() {
        return Err(SolveError::Grid(format!(
            "{} rows do not form a {}x{} grid",
            rows.len(),
            grid.nk(),
            grid.nh()
        )));
    }
    let mut cols = vec![vec![f64::NAN; grid.len()]; 6];
    for r in &rows {
        let i = grid.k_nodes.partition_point(|&x| x < r[0]);
        let j = grid.h_nodes.partition_point(|&x| x < r[1]);
        let idx = grid.index(i, j);
        for (c, col) in cols.iter_mut().enumerate() {
            col[idx] = r[c + 2];
        }
    }
    let mut it = cols.into_iter();
    let mut next = || it.next().expect("six columns");
    let value = ValueField::new(grid.clone(), next())?;
    let policy = PolicyField {
        grid,
        k_next: next(),
        h_next: next(),
        consumption: next(),
        market_time: next(),
        study_time: next(),
    };
    Ok((value, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::ModelParams;
    use crate::solver::{bellman_backup, SolveOptions};

    #[test]
    fn policy_round_trip_is_lossless() {
        let g = GridSpec::log_spaced((0.25, 4.0), 4, (0.25, 4.0), 4).unwrap();
        let mut vals = vec![0.0; g.len()];
        vals[0] = f64::NEG_INFINITY;
        let v0 = ValueField::new(g, vals).unwrap();
        let b = bellman_backup(&v0, &ModelParams::baseline(), &SolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_policy_csv(&b.value, &b.policy, &mut buf).unwrap();
        let (v, p) = read_policy_csv(buf.as_slice()).unwrap();
        assert_eq!(v.grid().k_nodes, b.value.grid().k_nodes);
        for (x, y) in v.values().iter().zip(b.value.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(p.k_next, b.policy.k_next);
        let mut again = Vec::new();
        write_policy_csv(&v, &p, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn neg_inf_token() {
        assert_eq!(f64::NEG_INFINITY.to_string(), "-inf");
        assert_eq!(parse("-inf").unwrap(), f64::NEG_INFINITY);
    }
}
