//! Run configuration: flat `section.key = value` lines, read with the TOML
//! parser (dotted keys are plain TOML) and written back one key per line.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use uzawa_core::solver::{log_space, InnerSearch};
use uzawa_core::{GridSpec, ModelParams, PhiSpec, SolveOptions, State, Theta};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub grid: Grid,
    pub solve: Solve,
    pub verify: Verify,
    pub simulate: Simulate,
    pub sweep: Sweep,
    pub run: Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n: f64,
    pub delta_k: f64,
    pub delta_h: f64,
    pub b: f64,
    pub gamma: f64,
    pub theta: f64,
    /// `linear` or `power`.
    pub phi: String,
    /// Exponent of the power learning technology.
    pub sigma: f64,
}

impl Default for Model {
    fn default() -> Self {
        let p = ModelParams::baseline();
        Model {
            a: p.a,
            alpha: p.alpha,
            beta: p.beta,
            n: p.n,
            delta_k: p.delta_k,
            delta_h: p.delta_h,
            b: p.b,
            gamma: p.gamma,
            theta: p.theta.value(),
            phi: "linear".into(),
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    /// `log` or `linear`.
    pub spacing: String,
    pub k_min: f64,
    pub k_max: f64,
    pub k_nodes: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub h_nodes: usize,
    /// Ratio axis for the reduced solve; defaults span `k/h` over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_max: Option<f64>,
    pub ratio_nodes: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            spacing: "log".into(),
            k_min: 0.25,
            k_max: 4.0,
            k_nodes: 8,
            h_min: 0.25,
            h_max: 4.0,
            h_nodes: 8,
            ratio_min: None,
            ratio_max: None,
            ratio_nodes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solve {
    /// `value-iteration` or `reduced`.
    pub method: String,
    pub tol: f64,
    pub max_iterations: usize,
    /// `golden-section-nested` or `grid-refinement`.
    pub inner_search: String,
    pub golden_iterations: usize,
    pub refinement_levels: usize,
    pub inner_points: usize,
    pub value_floor: f64,
}

impl Default for Solve {
    fn default() -> Self {
        let o = SolveOptions::default();
        let golden = match InnerSearch::default() {
            InnerSearch::GoldenSectionNested { iterations } => iterations,
            InnerSearch::GridRefinement { .. } => 16,
        };
        Solve {
            method: "value-iteration".into(),
            tol: o.tol,
            max_iterations: o.max_iterations,
            inner_search: "golden-section-nested".into(),
            golden_iterations: golden,
            refinement_levels: 8,
            inner_points: o.inner_points,
            value_floor: o.value_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Verify {
    pub samples: usize,
}

impl Default for Verify {
    fn default() -> Self {
        Verify { samples: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Simulate {
    /// `optimal` (read `policy.csv`) or `forced`.
    pub policy: String,
    /// Study time under the forced policy.
    pub study_time: f64,
    /// Investment share under the forced policy; capital is held constant
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invest_share: Option<f64>,
    pub start_k: f64,
    pub start_h: f64,
    pub horizon: usize,
}

impl Default for Simulate {
    fn default() -> Self {
        Simulate {
            policy: "optimal".into(),
            study_time: 0.5,
            invest_share: None,
            start_k: 1.0,
            start_h: 1.0,
            horizon: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    /// `beta`, `gamma` or `theta`.
    pub parameter: String,
    pub values: Vec<f64>,
    /// Also solve at every point that passes the discount condition.
    pub solve: bool,
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep {
            parameter: "beta".into(),
            values: vec![0.7, 0.8, 0.9],
            solve: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Run {
    pub seed: u64,
    pub out: String,
}

impl Default for Run {
    fn default() -> Self {
        Run {
            seed: 0,
            out: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// One `section.key = value` line per field.
    pub fn to_flat(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is plain data");
        let mut out = String::new();
        if let toml::Value::Table(sections) = value {
            for (section, body) in sections {
                if let toml::Value::Table(fields) = body {
                    for (key, v) in fields {
                        let _ = writeln!(out, "{section}.{key} = {v}");
                    }
                }
            }
        }
        out
    }

    pub fn params(&self) -> Result<ModelParams, String> {
        let m = &self.model;
        let phi = match m.phi.as_str() {
            "linear" => PhiSpec::Linear,
            "power" => PhiSpec::Power { sigma: m.sigma },
            other => return Err(format!("model.phi must be `linear` or `power`, got `{other}`")),
        };
        let p = ModelParams {
            a: m.a,
            alpha: m.alpha,
            beta: m.beta,
            n: m.n,
            delta_k: m.delta_k,
            delta_h: m.delta_h,
            b: m.b,
            gamma: m.gamma,
            theta: Theta::new(m.theta).map_err(|e| e.to_string())?,
            phi,
        };
        p.validate().map_err(|e| e.to_string())?;
        Ok(p)
    }

    pub fn grid(&self) -> Result<GridSpec, String> {
        let g = &self.grid;
        let axis = |lo: f64, hi: f64, n: usize, name: &str| -> Result<Vec<f64>, String> {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(format!("grid.{name}: need 0 < min < max, got [{lo}, {hi}]"));
            }
            match g.spacing.as_str() {
                "log" => Ok(log_space(lo, hi, n)),
                "linear" => Ok((0..n)
                    .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64 })
                    .collect()),
                other => Err(format!("grid.spacing must be `log` or `linear`, got `{other}`")),
            }
        };
        let k_nodes = axis(g.k_min, g.k_max, g.k_nodes, "k")?;
        let h_nodes = axis(g.h_min, g.h_max, g.h_nodes, "h")?;
        let r_lo = g.ratio_min.unwrap_or(g.k_min / g.h_max);
        let r_hi = g.ratio_max.unwrap_or(g.k_max / g.h_min);
        if !(r_lo > 0.0 && r_hi > r_lo) {
            return Err(format!("ratio axis [{r_lo}, {r_hi}] is empty"));
        }
        let spec = GridSpec {
            k_nodes,
            h_nodes,
            ratio_nodes: log_space(r_lo, r_hi, g.ratio_nodes),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn options(&self) -> Result<SolveOptions, String> {
        let s = &self.solve;
        let inner_search = match s.inner_search.as_str() {
            "golden-section-nested" => InnerSearch::GoldenSectionNested {
                iterations: s.golden_iterations,
            },
            "grid-refinement" => InnerSearch::GridRefinement {
                levels: s.refinement_levels,
            },
            other => {
                return Err(format!(
                    "solve.inner_search must be `golden-section-nested` or `grid-refinement`, got `{other}`"
                ))
            }
        };
        let o = SolveOptions {
            tol: s.tol,
            max_iterations: s.max_iterations,
            inner_search,
            inner_points: s.inner_points,
            value_floor: s.value_floor,
        };
        o.validate().map_err(|e| e.to_string())?;
        Ok(o)
    }

    pub fn start(&self) -> State {
        State::new(self.simulate.start_k, self.simulate.start_h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_baseline() {
        let c = RunConfig::default();
        assert_eq!(c.params().unwrap(), ModelParams::baseline());
        assert_eq!(c.options().unwrap(), SolveOptions::default());
        assert_eq!(c.grid().unwrap().len(), 64);
    }

    #[test]
    fn flat_round_trip() {
        let c = RunConfig::parse("model.beta = 0.75\ngrid.k_nodes = 5\nsweep.values = [0.1, 0.2]\n").unwrap();
        assert_eq!(c.model.beta, 0.75);
        let flat = c.to_flat();
        assert!(flat.contains("model.beta = 0.75\n"));
        let again = RunConfig::parse(&flat).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_flat(), flat);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("model.alpah = 0.3").is_err());
        let c = RunConfig::parse("model.alpha = 1.5").unwrap();
        assert!(c.params().is_err());
        let c = RunConfig::parse("solve.inner_search = \"simplex\"").unwrap();
        assert!(c.options().is_err());
    }
}
