use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weighted z-score transform: `(x - mean) / scale`.
///
/// Population convention: with category counts `d` and `n = Σ d`, a standardized vector has
/// `Σ d_c v_c = 0` and `(1/n) Σ d_c v_c² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
    pub weight_total: f64,
}

impl Standardization {
    pub fn fit(v: &[f64], weights: &[f64]) -> Result<Self> {
        debug_assert_eq!(v.len(), weights.len());
        let total: f64 = weights.iter().sum();
        let mean = v.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
        let var = v
            .iter()
            .zip(weights)
            .map(|(x, w)| w * (x - mean).powi(2))
            .sum::<f64>()
            / total;
        // Relative to the magnitude of v, so that rounding noise on a constant vector
        // still counts as degenerate.
        let magnitude = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if !(var.is_finite() && var > (1e-14 * magnitude).powi(2) && var > 0.0) {
            return Err(Error::DegenerateTransform);
        }
        Ok(Standardization {
            mean,
            scale: var.sqrt(),
            weight_total: total,
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.scale
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }

    pub fn apply_all(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|&x| self.apply(x)).collect()
    }

    /// The transform of `-x`, so that `negated().apply(-x) == -apply(x)`.
    pub fn negated(&self) -> Self {
        Standardization {
            mean: -self.mean,
            ..*self
        }
    }
}

/// Standardize `v` with category weights `weights` (counts) summing to the row total.
pub fn standardize_quantification(v: &[f64], weights: &[f64]) -> Result<(Vec<f64>, Standardization)> {
    let s = Standardization::fit(v, weights)?;
    Ok((s.apply_all(v), s))
}
