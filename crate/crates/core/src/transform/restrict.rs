use serde::{Deserialize, Serialize};

use crate::data::{ScalingLevel, ScalingSpec};
use crate::error::{Error, Result};

use super::isotonic::{weighted_isotonic, weighted_sse, Direction};
use super::ispline::{SplineBasis, SplineKnots};
use super::nnls::{nnls, weighted_least_squares, LinearFit};
use super::standardize::Standardization;

/// A fitted spline `a₀ + Σ_j a_j I_j(x)` on stored knots (before standardization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineFit {
    pub knots: SplineKnots,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl SplineFit {
    pub fn eval(&self, x: f64) -> f64 {
        let row = self.knots.basis_row(x);
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(b, a)| b * a)
                .sum::<f64>()
    }

    pub(crate) fn negated(&self) -> Self {
        SplineFit {
            knots: self.knots.clone(),
            intercept: -self.intercept,
            coefficients: self.coefficients.iter().map(|a| -a).collect(),
        }
    }

    fn from_linear(knots: &SplineKnots, fit: LinearFit, sign: f64) -> Self {
        SplineFit {
            knots: knots.clone(),
            intercept: fit.intercept,
            coefficients: fit.coefficients.iter().map(|a| sign * a).collect(),
        }
    }
}

/// Projection of an unrestricted quantification onto the feasible set of its level,
/// before standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub v: Vec<f64>,
    pub spline: Option<SplineFit>,
}

/// Result of [`restrict`]: a standardized quantification and how to reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Restricted {
    pub v: Vec<f64>,
    pub standardization: Standardization,
    pub spline: Option<SplineFit>,
}

fn spline_projection(
    basis: &SplineBasis,
    target: &[f64],
    weights: &[f64],
    monotone: bool,
) -> (Vec<f64>, SplineFit) {
    let fitted = |f: &SplineFit| -> Vec<f64> {
        basis
            .rows
            .iter()
            .map(|r| {
                f.intercept
                    + r.iter()
                        .zip(&f.coefficients)
                        .map(|(b, a)| b * a)
                        .sum::<f64>()
            })
            .collect()
    };
    if !monotone {
        let fit = SplineFit::from_linear(
            &basis.knots,
            weighted_least_squares(&basis.rows, target, weights),
            1.0,
        );
        return (fitted(&fit), fit);
    }
    let up = SplineFit::from_linear(&basis.knots, nnls(&basis.rows, target, weights), 1.0);
    let neg: Vec<f64> = target.iter().map(|t| -t).collect();
    let down = SplineFit::from_linear(&basis.knots, nnls(&basis.rows, &neg, weights), 1.0).negated();
    let (fu, fd) = (fitted(&up), fitted(&down));
    if weighted_sse(&fd, target, weights) < weighted_sse(&fu, target, weights) {
        (fd, down)
    } else {
        (fu, up)
    }
}

/// Project `v` onto the restriction set of `spec.level` in the `weights` metric.
///
/// Ordinal steps and monotone splines try both directions and keep the smaller weighted
/// SSE, ties going to increasing.
pub fn project(
    v: &[f64],
    weights: &[f64],
    spec: &ScalingSpec,
    basis: Option<&SplineBasis>,
) -> Result<Projection> {
    let need_basis = || {
        basis.ok_or_else(|| Error::InvalidSpec {
            column: String::new(),
            reason: "spline level without a basis".into(),
        })
    };
    Ok(match spec.level {
        ScalingLevel::Numeric => {
            return Err(Error::InvalidSpec {
                column: String::new(),
                reason: "numeric level has no quantification update".into(),
            })
        }
        ScalingLevel::NominalStep => Projection {
            v: v.to_vec(),
            spline: None,
        },
        ScalingLevel::OrdinalStep => {
            let up = weighted_isotonic(v, weights, Direction::Increasing);
            let down = weighted_isotonic(v, weights, Direction::Decreasing);
            let v = if weighted_sse(&down, v, weights) < weighted_sse(&up, v, weights) {
                down
            } else {
                up
            };
            Projection { v, spline: None }
        }
        ScalingLevel::SplineNonmonotone | ScalingLevel::SplineMonotone => {
            let (v, fit) = spline_projection(
                need_basis()?,
                v,
                weights,
                spec.level == ScalingLevel::SplineMonotone,
            );
            Projection {
                v,
                spline: Some(fit),
            }
        }
    })
}

/// Restrict an unrestricted quantification to its scaling level and standardize it.
///
/// `category_weights` weight the projection (counts in the linear model, aggregated Hessian
/// entries in the GLM); `counts` are the category frequencies used for standardization.
pub fn restrict(
    v_unrestricted: &[f64],
    category_weights: &[f64],
    counts: &[f64],
    spec: &ScalingSpec,
    basis: Option<&SplineBasis>,
) -> Result<Restricted> {
    let proj = project(v_unrestricted, category_weights, spec, basis)?;
    let standardization = Standardization::fit(&proj.v, counts)?;
    Ok(Restricted {
        v: standardization.apply_all(&proj.v),
        standardization,
        spline: proj.spline,
    })
}
