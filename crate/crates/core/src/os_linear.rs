//! Linear regression with optimal scaling, fitted by alternating least squares.
//!
//! The response is centred, so the model is `y − ȳ ≈ Σ_k β_k G_k v_k` without an intercept.
//! For each predictor the other terms are folded into the working vector
//! `u_k = y − ȳ − Σ_{l≠k} β_l φ_l`, the quantification is updated to the restricted,
//! standardized category means of `u_k` (signed by `β_k`), and `β_k` is refitted by least
//! squares.

use nalgebra::{DMatrix, DVector};

use crate::data::{CategoryEncoding, Dataset, Family, ScalingLevel};
use crate::error::{Error, Result};
use crate::glm::FitOptions;
use crate::model::{FitEvent, StepAction, FittedModel, Method, PreparedVariable, QuantificationSet, ARTIFACT_VERSION};
use crate::transform::nnls::solve_least_squares;
use crate::transform::{restrict, SplineFit, Standardization};

/// `ṽ_k⁺ = sign(β̃_k) D_k⁻¹ G_kᵀ u_k`, with sign `+1` when `β̃_k = 0`.
pub fn update_vk_linear(enc: &CategoryEncoding, u: &[f64], beta: f64) -> Vec<f64> {
    let sign = if beta < 0.0 { -1.0 } else { 1.0 };
    enc.category_sums(u)
        .iter()
        .zip(&enc.counts)
        .map(|(s, &d)| sign * s / d as f64)
        .collect()
}

/// `β̃_k⁺ = (ṽᵀ D ṽ)⁻¹ ṽᵀ Gᵀ u`.
pub fn update_betak_linear(enc: &CategoryEncoding, v: &[f64], u: &[f64]) -> f64 {
    let gu = enc.category_sums(u);
    let num: f64 = v.iter().zip(&gu).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().zip(&enc.counts).map(|(a, &d)| a * a * d as f64).sum();
    num / den
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum()
}

struct VarState {
    v: Vec<f64>,
    phi: Vec<f64>,
    standardization: Standardization,
    spline: Option<SplineFit>,
    degenerate: usize,
}

/// Fit linear OS regression of `ds.y` on `vars`. `opts.tol` is the relative loss change
/// at which the cycle stops.
pub fn os_linear_fit(ds: &Dataset, vars: &[PreparedVariable], opts: &FitOptions) -> Result<FittedModel> {
    let n = ds.n();
    if vars.iter().any(|v| v.enc.n() != n) {
        return Err(Error::Config("encodings do not match the response length".into()));
    }
    let ybar = ds.y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = ds.y.iter().map(|y| y - ybar).collect();

    let mut states = Vec::with_capacity(vars.len());
    for var in vars {
        let (v0, s0) = var.initial_quantification()?;
        let counts = var.enc.counts_f64();
        let (v, standardization, spline) = if var.spec.level.is_spline() {
            let r = restrict(&v0, &counts, &counts, &var.spec, var.basis.as_ref())?;
            (r.v, r.standardization, r.spline)
        } else {
            (v0, s0, None)
        };
        states.push(VarState {
            phi: var.enc.expand(&v),
            v,
            standardization,
            spline,
            degenerate: 0,
        });
    }

    // Starting coefficients: least squares on the z-scored predictors.
    let mut beta = if vars.is_empty() {
        Vec::new()
    } else {
        let x = DMatrix::from_fn(n, vars.len(), |i, k| states[k].phi[i]);
        solve_least_squares(&x, &DVector::from_row_slice(&yc))
            .iter()
            .copied()
            .collect()
    };
    let mut resid = yc.clone();
    for (st, b) in states.iter().zip(&beta) {
        for (r, f) in resid.iter_mut().zip(&st.phi) {
            *r -= b * f;
        }
    }
    let mut loss = sq_norm(&resid);
    let mut trace = vec![loss];
    let mut events = Vec::new();
    let mut converged = vars.is_empty();
    let mut cycles = 0;

    while !converged && cycles < opts.max_cycles {
        cycles += 1;
        let start: f64 = loss;
        for (k, var) in vars.iter().enumerate() {
            let st = &mut states[k];
            let u: Vec<f64> = resid
                .iter()
                .zip(&st.phi)
                .map(|(r, f)| r + beta[k] * f)
                .collect();
            let mut new_v = None;
            if var.spec.level != ScalingLevel::Numeric {
                let v_plus = update_vk_linear(&var.enc, &u, beta[k]);
                let counts = var.enc.counts_f64();
                match restrict(&v_plus, &counts, &counts, &var.spec, var.basis.as_ref()) {
                    Ok(r) => new_v = Some(r),
                    Err(Error::DegenerateTransform) => st.degenerate += 1,
                    Err(e) => return Err(e),
                }
            }
            let (v, phi) = match &new_v {
                Some(r) => (r.v.as_slice(), var.enc.expand(&r.v)),
                None => (st.v.as_slice(), st.phi.clone()),
            };
            let b = update_betak_linear(&var.enc, v, &u);
            let cand: Vec<f64> = u.iter().zip(&phi).map(|(a, f)| a - b * f).collect();
            let f = sq_norm(&cand);
            if f <= loss {
                beta[k] = b;
                if let Some(r) = new_v {
                    st.v = r.v;
                    st.standardization = r.standardization;
                    if r.spline.is_some() {
                        st.spline = r.spline;
                    }
                    st.phi = phi;
                }
                resid = cand;
                loss = f;
            } else {
                events.push(FitEvent {
                    cycle: cycles,
                    variable: k + 1,
                    halvings: 0,
                    action: StepAction::Reverted,
                });
            }
        }
        trace.push(loss);
        let rel = (start - loss).abs() / start.abs().max(f64::MIN_POSITIVE);
        if cycles >= 2 && rel < opts.tol {
            converged = true;
        }
    }

    let mut notes = Vec::new();
    let mut quantifications = Vec::with_capacity(vars.len());
    for (k, (var, st)) in vars.iter().zip(states).enumerate() {
        notes.extend(var.notes.iter().map(|m| format!("{}: {m}", var.name)));
        if st.degenerate > 0 {
            notes.push(format!(
                "{}: restricted quantification was constant in {} cycle(s); previous estimate kept",
                var.name, st.degenerate
            ));
        }
        let mut q = QuantificationSet::new(var, st.v, st.standardization, st.spline);
        if var.spec.level != ScalingLevel::Numeric {
            if let Some(first) = q.v.iter().find(|x| **x != 0.0) {
                if *first < 0.0 {
                    q.negate();
                    beta[k] = -beta[k];
                }
            }
        }
        quantifications.push(q);
    }
    let warnings = if converged {
        Vec::new()
    } else {
        vec![format!("not converged after {cycles} cycles")]
    };
    Ok(FittedModel {
        version: ARTIFACT_VERSION,
        method: Method::LinearOs,
        family: Family::LinearOs,
        response: ds.response_name.clone(),
        intercept: ybar,
        beta,
        quantifications,
        trace,
        converged,
        cycles,
        events,
        notes,
        warnings,
    })
}
