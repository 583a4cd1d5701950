use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Positive values with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::Domain("sample is empty".into()));
        }
        if values.len() != weights.len() {
            return Err(ModelError::Domain(format!(
                "{} values but {} weights",
                values.len(),
                weights.len()
            )));
        }
        let ok = |x: &f64| x.is_finite() && *x > 0.0;
        if !values.iter().all(ok) || !weights.iter().all(ok) {
            return Err(ModelError::Domain("values and weights must be positive and finite".into()));
        }
        Ok(WeightedSample { values, weights })
    }

    pub fn uniform(values: Vec<f64>) -> Result<Self, ModelError> {
        let n = values.len();
        Self::new(values, vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Weighted power mean `M_p = (Σ w_i x_i^p / Σ w_i)^(1/p)`, the weighted
/// geometric mean at `p = 0`, and max/min at `p = ±inf`.
pub fn power_mean(sample: &WeightedSample, p: f64) -> Result<f64, ModelError> {
    if p.is_nan() {
        return Err(ModelError::Domain("p is NaN".into()));
    }
    let (x, w) = (&sample.values, &sample.weights);
    if x.is_empty() {
        return Err(ModelError::Domain("sample is empty".into()));
    }
    let total = sample.total_weight();
    let hi = x.iter().copied().fold(f64::MIN_POSITIVE, f64::max);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    if p == f64::INFINITY {
        return Ok(hi);
    }
    if p == f64::NEG_INFINITY {
        return Ok(lo);
    }
    if p == 0.0 {
        let s: f64 = x.iter().zip(w).map(|(x, w)| w * x.ln()).sum();
        return Ok((s / total).exp());
    }
    // Factor out the extreme value so every term stays in (0, 1].
    let m = if p > 0.0 { hi } else { lo };
    let s: f64 = x.iter().zip(w).map(|(x, w)| w * (x / m).powf(p)).sum();
    Ok(m * (s / total).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> WeightedSample {
        WeightedSample::new(vec![2.0, 8.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn examples() {
        assert!((power_mean(&two(), 0.0).unwrap() - 4.0).abs() < 1e-14);
        assert!((power_mean(&two(), 1.0).unwrap() - 5.0).abs() < 1e-14);
        assert!((power_mean(&two(), -1.0).unwrap() - 3.2).abs() < 1e-14);
        let c = WeightedSample::new(vec![1.7; 3], vec![0.2, 5.0, 1.0]).unwrap();
        for p in [-7.0, -1.0, 0.0, 0.5, 3.0] {
            assert!((power_mean(&c, p).unwrap() - 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(WeightedSample::new(vec![], vec![]).is_err());
        assert!(WeightedSample::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(WeightedSample::new(vec![0.0], vec![1.0]).is_err());
        assert!(WeightedSample::new(vec![1.0], vec![-1.0]).is_err());
    }

    #[test]
    fn extremes() {
        assert_eq!(power_mean(&two(), f64::INFINITY).unwrap(), 8.0);
        assert_eq!(power_mean(&two(), f64::NEG_INFINITY).unwrap(), 2.0);
        assert!((power_mean(&two(), 200.0).unwrap() - 8.0 * 0.5f64.powf(1.0 / 200.0)).abs() < 1e-12);
    }
}
