//! Ordinary logistic regression with dummy coding, fitted by Newton-Raphson (IRLS).

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, Family, ScalingLevel};
use crate::error::{Error, Result};
use crate::model::{FittedModel, Method, PreparedVariable, QuantificationSet, ARTIFACT_VERSION};
use crate::transform::Standardization;

use super::logistic::{gradient_hessian, logit, neg_loglik};

/// Coefficient magnitude at which the fit stops and reports separation.
pub const COEF_CAP: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DummyFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub separated: bool,
    pub trace: Vec<f64>,
}

/// Newton-Raphson MLE of `y ~ design`. The first column of `design` must be the intercept.
pub fn dummy_logistic_fit(y: &[f64], design: &DMatrix<f64>, tol: f64, max_iter: usize) -> Result<DummyFit> {
    let (n, m) = design.shape();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut beta = DVector::zeros(m);
    beta[0] = logit(ybar.clamp(1e-12, 1.0 - 1e-12));
    let eta_of = |b: &DVector<f64>| -> Vec<f64> { (design * b).iter().copied().collect() };
    let mut eta = eta_of(&beta);
    let mut loss = neg_loglik(&eta, y);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut separated = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (grad, hess) = gradient_hessian(&eta, y);
        let g = design.transpose() * DVector::from_row_slice(&grad);
        let mut h = design.clone();
        for (i, w) in hess.iter().enumerate() {
            h.row_mut(i).scale_mut(*w);
        }
        let info = design.transpose() * h;
        let step = info.cholesky().ok_or(Error::RankDeficient)?.solve(&g);
        let mut next = None;
        for j in 0..=30 {
            let cand = &beta - &step * 0.5_f64.powi(j);
            let e = eta_of(&cand);
            let f = neg_loglik(&e, y);
            if f <= loss {
                next = Some((cand, e, f));
                break;
            }
        }
        let Some((b, e, f)) = next else {
            converged = true;
            break;
        };
        let rel = (loss - f).abs() / loss.max(f64::MIN_POSITIVE);
        beta = b;
        eta = e;
        loss = f;
        trace.push(loss);
        if beta.iter().skip(1).any(|c| c.abs() > COEF_CAP) {
            separated = true;
            break;
        }
        if rel < tol {
            converged = true;
            break;
        }
    }
    Ok(DummyFit {
        coefficients: beta.iter().copied().collect(),
        iterations,
        converged,
        separated,
        trace,
    })
}

/// Column layout of a dummy-coded design.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignTerm {
    /// One z-scored column.
    Linear { standardization: Standardization, v: Vec<f64> },
    /// Indicator columns for categories `1..C`; category 0 is the reference.
    Dummies { categories: usize },
}

/// Intercept, z-scored columns for numeric levels and `C − 1` dummies for nominal levels, for
/// `n` rows.
pub fn dummy_design(n: usize, vars: &[PreparedVariable]) -> Result<(DMatrix<f64>, Vec<DesignTerm>)> {
    let mut terms = Vec::with_capacity(vars.len());
    let mut width = 1;
    for var in vars {
        match var.spec.level {
            ScalingLevel::Numeric => {
                let (v, s) = var.initial_quantification()?;
                terms.push(DesignTerm::Linear { standardization: s, v });
                width += 1;
            }
            ScalingLevel::NominalStep => {
                let c = var.enc.num_categories();
                terms.push(DesignTerm::Dummies { categories: c });
                width += c - 1;
            }
            other => {
                return Err(Error::InvalidSpec {
                    column: var.name.clone(),
                    reason: format!(
                        "dummy-coded logistic regression supports numeric and nominal-step, not {}",
                        other.as_str()
                    ),
                })
            }
        }
    }
    let mut x = DMatrix::zeros(n, width);
    x.column_mut(0).fill(1.0);
    let mut col = 1;
    for (var, term) in vars.iter().zip(&terms) {
        match term {
            DesignTerm::Linear { v, .. } => {
                for (i, &c) in var.enc.g.iter().enumerate() {
                    x[(i, col)] = v[c];
                }
                col += 1;
            }
            DesignTerm::Dummies { categories } => {
                for (i, &c) in var.enc.g.iter().enumerate() {
                    if c > 0 {
                        x[(i, col + c - 1)] = 1.0;
                    }
                }
                col += categories - 1;
            }
        }
    }
    Ok((x, terms))
}

/// Fit a dummy-coded logistic model and express it as a [`FittedModel`].
///
/// Nominal variables carry their dummy coefficients as the quantification (reference 0)
/// with coefficient 1; numeric variables carry their z-scored values and slope.
pub fn dummy_logistic_model(ds: &Dataset, vars: &[PreparedVariable], tol: f64, max_iter: usize) -> Result<FittedModel> {
    let (x, terms) = dummy_design(ds.n(), vars)?;
    let fit = dummy_logistic_fit(&ds.y, &x, tol, max_iter)?;
    let coef = &fit.coefficients;
    let mut beta = Vec::with_capacity(vars.len());
    let mut quantifications = Vec::with_capacity(vars.len());
    let mut col = 1;
    for (var, term) in vars.iter().zip(terms) {
        match term {
            DesignTerm::Linear { standardization, v } => {
                beta.push(coef[col]);
                quantifications.push(QuantificationSet::new(var, v, standardization, None));
                col += 1;
            }
            DesignTerm::Dummies { categories } => {
                let mut v = vec![0.0];
                v.extend_from_slice(&coef[col..col + categories - 1]);
                beta.push(1.0);
                let identity = Standardization {
                    mean: 0.0,
                    scale: 1.0,
                    weight_total: var.enc.n() as f64,
                };
                quantifications.push(QuantificationSet::new(var, v, identity, None));
                col += categories - 1;
            }
        }
    }
    let mut warnings = Vec::new();
    if fit.separated {
        warnings.push(format!(
            "separation: a coefficient exceeded {COEF_CAP} in magnitude; fit stopped"
        ));
    } else if !fit.converged {
        warnings.push(format!("not converged after {} iterations", fit.iterations));
    }
    Ok(FittedModel {
        version: ARTIFACT_VERSION,
        method: Method::DummyLogistic,
        family: Family::Logistic,
        response: ds.response_name.clone(),
        intercept: coef[0],
        beta,
        quantifications,
        trace: fit.trace,
        converged: fit.converged,
        cycles: fit.iterations,
        events: Vec::new(),
        notes: vars
            .iter()
            .flat_map(|v| v.notes.iter().map(move |m| format!("{}: {m}", v.name)))
            .collect(),
        warnings,
    })
}
