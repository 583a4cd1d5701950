use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use uzawa_core::paths::{
    growth_diagnostics, simulate as roll, transversality_diagnostic, write_path_csv, CapitalRule, ForcedControl,
    Path,
};
use uzawa_core::primitives::Direct;
use uzawa_core::solver::io::{read_policy_csv, write_diagnostics_json, write_policy_csv, write_value_csv};
use uzawa_core::solver::{solve_reduced, solve_transformed, solve_value_iteration};
use uzawa_core::verify::{check_all, compute_constants};
use uzawa_core::{ModelParams, SolveError, SolveResult, ValueField};

use crate::config::RunConfig;
use crate::Exit;

type Outcome = Result<Exit, String>;

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, String> {
    let dir = PathBuf::from(&cfg.run.out);
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    Ok(dir)
}

fn create(dir: &std::path::Path, name: &str) -> Result<BufWriter<File>, String> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Refuses when `βζ >= 1`: existence of the value function rests on it.
fn discount_gate(p: &ModelParams) -> Option<Exit> {
    let bz = compute_constants(p).beta_zeta;
    if bz < 1.0 {
        return None;
    }
    eprintln!("refusing to solve: beta*zeta = {bz:.6} >= 1");
    Some(Exit::Assumption)
}

pub fn check(cfg: &RunConfig) -> Outcome {
    let p = cfg.params()?;
    let report = check_all(&p, cfg.verify.samples, cfg.run.seed);
    let dir = out_dir(cfg)?;
    let text = report.to_text();
    fs::write(dir.join("report.txt"), &text).map_err(|e| e.to_string())?;
    fs::write(dir.join("report.json"), report.to_json()).map_err(|e| e.to_string())?;
    print!("{text}");
    Ok(if report.all_pass() { Exit::Ok } else { Exit::Assumption })
}

fn write_solution(dir: &std::path::Path, r: &SolveResult) -> Result<(), String> {
    write_value_csv(&r.value, create(dir, "value.csv")?).map_err(|e| e.to_string())?;
    write_policy_csv(&r.value, &r.policy, create(dir, "policy.csv")?).map_err(|e| e.to_string())?;
    write_diagnostics_json(&r.diagnostics, create(dir, "diagnostics.json")?).map_err(|e| e.to_string())
}

fn summarize(r: &SolveResult) {
    let d = &r.diagnostics;
    println!("method              {}", d.method);
    println!("converged           {}", d.converged);
    println!("iterations          {}", r.iterations);
    println!("final sup change    {:e}", r.final_sup_change);
    println!("bellman residual    {:e}", r.max_bellman_residual);
    if let Some(h) = r.homogeneity_residual {
        println!("homogeneity resid.  {h:e}");
    }
    println!("clipped transitions {}", d.clipped_transitions);
    println!("-inf nodes          {}", d.non_finite_nodes.len());
}

/// Writes whatever was computed and maps the solver error to an exit code.
fn finish(dir: &std::path::Path, outcome: Result<SolveResult, SolveError>) -> Outcome {
    match outcome {
        Ok(r) => {
            write_solution(dir, &r)?;
            summarize(&r);
            Ok(Exit::Ok)
        }
        Err(SolveError::NotConverged { partial, iterations, last_change }) => {
            write_solution(dir, &partial)?;
            summarize(&partial);
            eprintln!("not converged after {iterations} iterations (last sup change {last_change:e})");
            Ok(Exit::NotConverged)
        }
        Err(SolveError::DiscountCondition { beta_zeta }) => {
            eprintln!("refusing to solve: beta*zeta = {beta_zeta:.6} >= 1");
            Ok(Exit::Assumption)
        }
        Err(e) => Err(e.to_string()),
    }
}

fn run_solver(cfg: &RunConfig, p: &ModelParams) -> Result<Result<SolveResult, SolveError>, String> {
    let grid = cfg.grid()?;
    let opts = cfg.options()?;
    Ok(match cfg.solve.method.as_str() {
        "value-iteration" => solve_value_iteration(p, &grid, &opts),
        "reduced" if p.gamma == 0.0 => solve_reduced(&Direct::new(p), &grid, &opts).map(|r| r.result),
        "reduced" => return Err("solve.method = reduced needs model.gamma = 0; use `transform`".into()),
        other => return Err(format!("solve.method must be `value-iteration` or `reduced`, got `{other}`")),
    })
}

pub fn solve(cfg: &RunConfig) -> Outcome {
    let p = cfg.params()?;
    if let Some(exit) = discount_gate(&p) {
        return Ok(exit);
    }
    let outcome = run_solver(cfg, &p)?;
    finish(&out_dir(cfg)?, outcome)
}

fn report_path(path: &Path, value: Option<&ValueField>, p: &ModelParams) {
    let g = growth_diagnostics(path);
    println!("periods          {}", path.horizon());
    println!("feasible         {}", path.feasible);
    println!("flagged periods  {}", path.flagged.len());
    println!("growth class     {:?}", g.classification);
    println!("final g_k, g_h   {:.6}, {:.6}", g.g_k.last().unwrap_or(&f64::NAN), g.g_h.last().unwrap_or(&f64::NAN));
    if let Some(v) = value {
        let t = transversality_diagnostic(path, v, p);
        println!("beta^t V         S1 {:?}, S2 {:?}, settled at {:?}", t.s1, t.s2, t.settled_at);
    }
}

pub fn simulate(cfg: &RunConfig) -> Outcome {
    let p = cfg.params()?;
    let dir = out_dir(cfg)?;
    let start = cfg.start();
    let horizon = cfg.simulate.horizon;
    let (path, value) = match cfg.simulate.policy.as_str() {
        "optimal" => {
            let file = dir.join("policy.csv");
            let f = File::open(&file).map_err(|e| format!("{}: {e} (run `solve` first)", file.display()))?;
            let (value, policy) = read_policy_csv(f).map_err(|e| format!("{}: {e}", file.display()))?;
            if !value.grid().contains(start) {
                return Err(format!("start ({}, {}) is outside the solved grid", start.k, start.h));
            }
            (roll(&policy, start, horizon, &p).map_err(|e| e.to_string())?, Some(value))
        }
        "forced" => {
            let rule = match cfg.simulate.invest_share {
                Some(share) => CapitalRule::Share { share },
                None => CapitalRule::Hold,
            };
            let forced = ForcedControl::study(cfg.simulate.study_time, rule).map_err(|e| e.to_string())?;
            (roll(&forced, start, horizon, &p).map_err(|e| e.to_string())?, None)
        }
        other => return Err(format!("simulate.policy must be `optimal` or `forced`, got `{other}`")),
    };
    write_path_csv(&path, value.as_ref(), &p, create(&dir, "path.csv")?).map_err(|e| e.to_string())?;
    report_path(&path, value.as_ref(), &p);
    Ok(Exit::Ok)
}

pub fn transform(cfg: &RunConfig) -> Outcome {
    let p = cfg.params()?;
    if let Some(exit) = discount_gate(&p) {
        return Ok(exit);
    }
    let grid = cfg.grid()?;
    let opts = cfg.options()?;
    let unpack = |r: Result<SolveResult, SolveError>| match r {
        Ok(r) => Ok((r, true)),
        Err(SolveError::NotConverged { partial, .. }) => Ok((*partial, false)),
        Err(e) => Err(e.to_string()),
    };
    let (direct, ok_d) = unpack(solve_value_iteration(&p, &grid, &opts))?;
    let (moved, ok_t) = unpack(solve_transformed(&p, &grid, &opts))?;

    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_writer(create(&dir, "transform.csv")?);
    let err = |e: csv::Error| e.to_string();
    w.write_record(["k", "h", "hhat", "V_direct", "V_transformed", "rel_gap"]).map_err(err)?;
    let rho = p.rho();
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let s = grid.node(idx);
        let (a, b) = (direct.value.values()[idx], moved.value.values()[idx]);
        let gap = if a == b { 0.0 } else { (a - b).abs() / (1.0 + a.abs()) };
        if grid.is_interior(idx, 1) {
            worst = worst.max(gap);
        }
        let row = [s.k, s.h, s.h.powf(rho), a, b, gap];
        w.write_record(row.iter().map(|x| x.to_string())).map_err(err)?;
    }
    w.flush().map_err(|e| e.to_string())?;
    println!("rho = {rho}");
    println!("direct iterations {}, transformed iterations {}", direct.iterations, moved.iterations);
    println!("max relative gap on interior nodes: {worst:e}");
    Ok(if ok_d && ok_t { Exit::Ok } else { Exit::NotConverged })
}

pub fn sweep(cfg: &RunConfig) -> Outcome {
    let name = cfg.sweep.parameter.as_str();
    if !matches!(name, "beta" | "gamma" | "theta") {
        return Err(format!("sweep.parameter must be `beta`, `gamma` or `theta`, got `{name}`"));
    }
    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_writer(create(&dir, "sweep.csv")?);
    let err = |e: csv::Error| e.to_string();
    w.write_record([
        "parameter", "value", "status", "failures", "zeta", "beta_zeta", "d_h", "converged", "iterations", "V_start",
    ])
    .map_err(err)?;
    let start = cfg.start();
    for &x in &cfg.sweep.values {
        let mut point = cfg.clone();
        match name {
            "beta" => point.model.beta = x,
            "gamma" => point.model.gamma = x,
            _ => point.model.theta = x,
        }
        let p = point.params()?;
        let report = check_all(&p, cfg.verify.samples, cfg.run.seed);
        let status = if report.all_pass() { "pass" } else { "fail" };
        let mut row = vec![
            name.to_string(),
            x.to_string(),
            status.to_string(),
            report.failures().join(";"),
            report.zeta.to_string(),
            report.beta_zeta.to_string(),
            report.d_h.to_string(),
        ];
        if cfg.sweep.solve && report.beta_zeta < 1.0 {
            let (r, converged) = match run_solver(&point, &p)? {
                Ok(r) => (r, true),
                Err(SolveError::NotConverged { partial, .. }) => (*partial, false),
                Err(e) => return Err(e.to_string()),
            };
            row.push(converged.to_string());
            row.push(r.iterations.to_string());
            row.push(r.value.eval_state(start).to_string());
        } else {
            row.extend(std::iter::repeat_n(String::new(), 3));
        }
        println!("{name} = {x}: {status}{}", if status == "fail" { format!(" ({})", row[3]) } else { String::new() });
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| e.to_string())?;
    Ok(Exit::Ok)
}
