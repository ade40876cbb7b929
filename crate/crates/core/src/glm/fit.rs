//! GLM-OS fitting by cyclic Newton updates over (intercept, then each predictor).
//!
//! Every predictor contributes `β_k φ_k` with `φ_k = G_k v_k`. A cycle visits the intercept
//! and then every predictor. For a predictor it takes a Newton step for the quantification
//! `v_k` (skipped for the numeric level), restricts and standardizes it, recomputes the
//! derivatives and then takes a Newton step for `β_k`. A step that would raise the negative
//! log-likelihood is halved. If halving does not help, a majorization step for `v_k` is
//! tried, then a coefficient-only step, and the update is reverted only when all fail.

use serde::{Deserialize, Serialize};

use crate::data::{CategoryEncoding, Dataset, Family, ScalingLevel};
use crate::error::{Error, Result};
use crate::model::{FitEvent, StepAction, FittedModel, Method, PreparedVariable, QuantificationSet, ARTIFACT_VERSION};
use crate::transform::{restrict, Restricted, SplineFit, Standardization};

use super::logistic::{gradient_hessian, logit, neg_loglik};

/// `|β_k|` below which the quantification update is skipped.
const BETA_FLOOR: f64 = 1e-12;
/// Aggregated Hessian below which a category is reported as nearly uninformative.
const SMALL_CURVATURE: f64 = 1e-8;
/// `max |η|` above which quasi-separation is reported.
const SEPARATION_ETA: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_cycles: usize,
    /// Relative change of the loss over one cycle that counts as converged.
    pub tol: f64,
    pub step_halving_max: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_cycles: 500,
            tol: 1e-8,
            step_halving_max: 20,
        }
    }
}

/// Unrestricted Newton update of a quantification, category by category.
///
/// Returns `ṽ⁺` with `ṽ⁺_c = ṽ_c − (Σ_{g_i=c} grad_i) / (β H_c)` together with the aggregated
/// Hessian `H_c = Σ_{g_i=c} hess_i`, which weights the subsequent restriction.
pub fn update_vk_glm(
    enc: &CategoryEncoding,
    beta: f64,
    v: &[f64],
    grad: &[f64],
    hess: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let gsum = enc.category_sums(grad);
    let hsum = enc.category_sums(hess);
    let v_plus = v
        .iter()
        .zip(gsum.iter().zip(&hsum))
        .map(|(&vc, (&g, &h))| vc - g / (beta * h))
        .collect();
    (v_plus, hsum)
}

/// Newton step for the coefficient of `phi`: `−(φᵀ grad) / (φᵀ diag(hess) φ)`.
pub fn beta_step(phi: &[f64], grad: &[f64], hess: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&f, &g), &h) in phi.iter().zip(grad).zip(hess) {
        num += f * g;
        den += f * f * h;
    }
    -num / den
}

/// Newton step for (intercept, coefficient of `phi`) from the 2×2 Hessian block. Falls back to
/// the coefficient alone when the block is numerically singular.
fn joint_step(phi: &[f64], grad: &[f64], hess: &[f64]) -> (f64, f64) {
    let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&f, &g), &h) in phi.iter().zip(grad).zip(hess) {
        g0 += g;
        g1 += f * g;
        h00 += h;
        h01 += h * f;
        h11 += h * f * f;
    }
    let det = h00 * h11 - h01 * h01;
    if det > 1e-12 * h00 * h11 {
        ((h01 * g1 - h11 * g0) / det, (h01 * g0 - h00 * g1) / det)
    } else {
        (0.0, -g1 / h11)
    }
}

/// `β̃_k⁺` for predictor values `phi` (the intercept uses `phi = 1`).
pub fn update_betak_glm(phi: &[f64], beta: f64, grad: &[f64], hess: &[f64]) -> f64 {
    beta + beta_step(phi, grad, hess)
}

/// `β̃_0⁺ = β̃_0 − Σ grad / Σ hess`.
pub fn update_intercept(beta0: f64, grad: &[f64], hess: &[f64]) -> f64 {
    beta0 - grad.iter().sum::<f64>() / hess.iter().sum::<f64>()
}

struct VarState {
    v: Vec<f64>,
    phi: Vec<f64>,
    standardization: Standardization,
    spline: Option<SplineFit>,
    degenerate: usize,
    skipped: usize,
    weak: bool,
}

fn initial_state(var: &PreparedVariable) -> Result<VarState> {
    let (v0, s0) = var.initial_quantification()?;
    let counts = var.enc.counts_f64();
    let (v, standardization, spline) = if var.spec.level.is_spline() {
        // Refit the z-scored values in the spline space; linear functions lie in it, so this
        // only records the spline representation.
        let r = restrict(&v0, &counts, &counts, &var.spec, var.basis.as_ref())?;
        (r.v, r.standardization, r.spline)
    } else {
        (v0, s0, None)
    };
    Ok(VarState {
        phi: var.enc.expand(&v),
        v,
        standardization,
        spline,
        degenerate: 0,
        skipped: 0,
        weak: false,
    })
}

fn add_scaled(eta: &mut [f64], phi: &[f64], scale: f64) {
    for (e, f) in eta.iter_mut().zip(phi) {
        *e += scale * f;
    }
}

/// Outcome of moving predictor `k` to a new quantification and taking a scaled coefficient step.
struct Trial {
    step0: f64,
    step: f64,
    restricted: Option<Restricted>,
    phi: Option<Vec<f64>>,
    eta: Vec<f64>,
    loss: f64,
}

/// Replace the quantification by `restricted` (or keep it) and then take `t` times the joint
/// Newton step for the intercept and the coefficient at the new point.
///
/// Standardizing a new quantification re-centres it, which shifts every row's `η` by a
/// constant that a step in `β_k` alone cannot undo; the intercept takes that shift up.
fn trial(
    eta: &[f64],
    y: &[f64],
    beta: f64,
    st: &VarState,
    enc: &CategoryEncoding,
    restricted: Option<Restricted>,
    t: f64,
) -> Trial {
    let mut cand = eta.to_vec();
    let phi_new = restricted.as_ref().map(|r| {
        let phi = enc.expand(&r.v);
        for ((c, new), old) in cand.iter_mut().zip(&phi).zip(&st.phi) {
            *c += beta * (new - old);
        }
        phi
    });
    let phi = phi_new.as_deref().unwrap_or(&st.phi);
    let (g, h) = gradient_hessian(&cand, y);
    let (d0, dk) = joint_step(phi, &g, &h);
    let (step0, step) = (t * d0, t * dk);
    for (c, f) in cand.iter_mut().zip(phi) {
        *c += step0 + step * f;
    }
    let loss = neg_loglik(&cand, y);
    Trial {
        step0,
        step,
        restricted,
        phi: phi_new,
        eta: cand,
        loss,
    }
}

/// First trial with `t = 1, 1/2, …, 2^-max` and finally `t = 0` whose loss is at most `loss`.
fn halved_trials(opts: &FitOptions, mut f: impl FnMut(f64) -> Trial, loss: f64) -> Option<(usize, Trial)> {
    (0..=opts.step_halving_max + 1).find_map(|j| {
        let t = if j > opts.step_halving_max { 0.0 } else { 0.5_f64.powi(j as i32) };
        let tr = f(t);
        (tr.loss <= loss).then_some((j, tr))
    })
}

/// Fit a logistic GLM-OS model. `vars` come from [`crate::model::prepare`] on `ds`.
pub fn glm_os_fit(ds: &Dataset, vars: &[PreparedVariable], opts: &FitOptions) -> Result<FittedModel> {
    let y = &ds.y;
    let n = y.len();
    if vars.iter().any(|v| v.enc.n() != n) {
        return Err(Error::Config("encodings do not match the response length".into()));
    }
    let ybar = y.iter().sum::<f64>() / n as f64;
    if !(ybar > 0.0 && ybar < 1.0) {
        return Err(Error::Response {
            column: ds.response_name.clone(),
            reason: "both outcome values 0 and 1 must occur".into(),
        });
    }

    let mut states = vars.iter().map(initial_state).collect::<Result<Vec<_>>>()?;
    let mut beta0 = logit(ybar);
    let mut beta: Vec<f64> = vec![0.0; vars.len()];
    let mut eta = vec![beta0; n];
    let mut loss = neg_loglik(&eta, y);
    let mut trace = vec![loss];
    let mut events = Vec::new();
    let mut converged = false;
    let mut cycles = 0;

    let ones = vec![1.0; n];
    while cycles < opts.max_cycles {
        cycles += 1;
        let start: f64 = loss;

        // Intercept.
        {
            let (grad, hess) = gradient_hessian(&eta, y);
            let delta = update_intercept(beta0, &grad, &hess) - beta0;
            let mut accepted = None;
            for j in 0..=opts.step_halving_max {
                let t = 0.5_f64.powi(j as i32);
                let mut cand = eta.clone();
                add_scaled(&mut cand, &ones, t * delta);
                let f = neg_loglik(&cand, y);
                if f <= loss {
                    accepted = Some((j, t, cand, f));
                    break;
                }
            }
            match accepted {
                Some((j, t, cand, f)) => {
                    beta0 += t * delta;
                    eta = cand;
                    loss = f;
                    if j > 0 {
                        events.push(FitEvent { cycle: cycles, variable: 0, halvings: j, action: StepAction::Halved });
                    }
                }
                None => events.push(FitEvent {
                    cycle: cycles,
                    variable: 0,
                    halvings: opts.step_halving_max,
                    action: StepAction::Reverted,
                }),
            }
        }

        for (k, var) in vars.iter().enumerate() {
            let st = &mut states[k];
            let (grad, hess) = gradient_hessian(&eta, y);
            let counts = var.enc.counts_f64();

            // Unrestricted quantification step, if this level has one.
            let mut proposal: Option<(Vec<f64>, Vec<f64>, Restricted)> = None;
            if var.spec.level != ScalingLevel::Numeric {
                if beta[k].abs() < BETA_FLOOR {
                    if cycles > 1 {
                        st.skipped += 1;
                    }
                } else {
                    let (v_plus, hsum) = update_vk_glm(&var.enc, beta[k], &st.v, &grad, &hess);
                    if hsum.iter().any(|&h| h < SMALL_CURVATURE) {
                        st.weak = true;
                    }
                    match restrict(&v_plus, &hsum, &counts, &var.spec, var.basis.as_ref()) {
                        Ok(r) => proposal = Some((v_plus, hsum, r)),
                        Err(Error::DegenerateTransform) => st.degenerate += 1,
                        Err(e) => return Err(e),
                    }
                }
            }

            // Newton step for (v, β), halved jointly.
            let mut outcome = None;
            for j in 0..=opts.step_halving_max {
                let t = 0.5_f64.powi(j as i32);
                let restricted = match &proposal {
                    None => None,
                    Some((_, _, r)) if j == 0 => Some(r.clone()),
                    Some((v_plus, hsum, _)) => {
                        let mixed: Vec<f64> = st
                            .v
                            .iter()
                            .zip(v_plus)
                            .map(|(a, b)| a + t * (b - a))
                            .collect();
                        match restrict(&mixed, hsum, &counts, &var.spec, var.basis.as_ref()) {
                            Ok(r) => Some(r),
                            Err(_) => continue,
                        }
                    }
                };
                let tr = trial(&eta, y, beta[k], st, &var.enc, restricted, t);
                if tr.loss <= loss {
                    outcome = Some((StepAction::Halved, j, tr));
                    break;
                }
            }

            // The Hessian-weighted step need not descend once it is standardized, which
            // happens for categories with almost no curvature. The majorization step uses
            // the curvature bound 1/4 instead, so its restricted, standardized solution
            // cannot raise the loss.
            if outcome.is_none() && proposal.is_some() {
                let gsum = var.enc.category_sums(&grad);
                let v_mm: Vec<f64> = st
                    .v
                    .iter()
                    .zip(gsum.iter().zip(&counts))
                    .map(|(&vc, (&g, &d))| vc - 4.0 * g / (beta[k] * d))
                    .collect();
                if let Ok(r) = restrict(&v_mm, &counts, &counts, &var.spec, var.basis.as_ref()) {
                    outcome = halved_trials(opts, |t| trial(&eta, y, beta[k], st, &var.enc, Some(r.clone()), t), loss)
                        .map(|(j, tr)| (StepAction::Majorized, j, tr));
                }
            }
            if outcome.is_none() && proposal.is_some() {
                outcome = halved_trials(opts, |t| trial(&eta, y, beta[k], st, &var.enc, None, t), loss)
                    .map(|(j, tr)| (StepAction::CoefficientOnly, j, tr));
            }

            match outcome {
                Some((action, j, tr)) => {
                    beta0 += tr.step0;
                    beta[k] += tr.step;
                    if let (Some(r), Some(phi)) = (tr.restricted, tr.phi) {
                        st.v = r.v;
                        st.standardization = r.standardization;
                        if r.spline.is_some() {
                            st.spline = r.spline;
                        }
                        st.phi = phi;
                    }
                    eta = tr.eta;
                    loss = tr.loss;
                    if action != StepAction::Halved || j > 0 {
                        events.push(FitEvent { cycle: cycles, variable: k + 1, halvings: j, action });
                    }
                }
                None => events.push(FitEvent {
                    cycle: cycles,
                    variable: k + 1,
                    halvings: opts.step_halving_max,
                    action: StepAction::Reverted,
                }),
            }
        }

        trace.push(loss);
        let rel = (start - loss).abs() / start.abs().max(f64::MIN_POSITIVE);
        if cycles >= 2 && rel < opts.tol {
            converged = true;
            break;
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
        if st.skipped > 0 {
            notes.push(format!(
                "{}: quantification update skipped in {} cycle(s) because its coefficient was zero",
                var.name, st.skipped
            ));
        }
        if st.weak {
            notes.push(format!("{}: a category carries almost no curvature", var.name));
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

    let mut warnings = Vec::new();
    let max_eta = eta.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    if max_eta > SEPARATION_ETA {
        warnings.push(format!(
            "quasi-separation: max |η| = {max_eta:.1}; some coefficients are drifting to infinity"
        ));
    }
    if !converged {
        warnings.push(format!("not converged after {cycles} cycles"));
    }

    Ok(FittedModel {
        version: ARTIFACT_VERSION,
        method: Method::GlmOs,
        family: Family::Logistic,
        response: ds.response_name.clone(),
        intercept: beta0,
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_encoding(rng: &mut ChaCha8Rng, n: usize, c: usize) -> CategoryEncoding {
        let mut g: Vec<usize> = (0..n).map(|i| if i < c { i } else { rng.random_range(0..c) }).collect();
        g.rotate_left(rng.random_range(0..n));
        let mut counts = vec![0; c];
        for &x in &g {
            counts[x] += 1;
        }
        CategoryEncoding {
            g,
            labels: (0..c).map(|i| i.to_string()).collect(),
            members: (0..c).map(|i| vec![i.to_string()]).collect(),
            values: (0..c).map(|i| i as f64).collect(),
            counts,
        }
    }

    fn indicator(enc: &CategoryEncoding) -> DMatrix<f64> {
        DMatrix::from_fn(enc.n(), enc.num_categories(), |i, c| f64::from(u8::from(enc.g[i] == c)))
    }

    #[test]
    fn scalar_newton_step_for_one_category() {
        let enc = CategoryEncoding {
            g: vec![0; 3],
            labels: vec!["a".into()],
            members: vec![vec!["a".into()]],
            values: vec![1.0],
            counts: vec![3],
        };
        let grad = [0.1, -0.3, 0.4];
        let hess = [0.2, 0.25, 0.1];
        let (v, _) = update_vk_glm(&enc, 1.0, &[2.0], &grad, &hess);
        assert_abs_diff_eq!(v[0], 2.0 - 0.2 / 0.55, epsilon = 1e-15);
        let (v, _) = update_vk_glm(&enc, 1.0, &[2.0], &[0.0; 3], &hess);
        assert_eq!(v, vec![2.0]);
    }

    #[test]
    fn vk_update_matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(8..30);
            let c = rng.random_range(2..6);
            let enc = random_encoding(&mut rng, n, c);
            let beta = rng.random_range(0.2..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let v: Vec<f64> = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
            let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            let hess: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.25)).collect();
            let (fast, _) = update_vk_glm(&enc, beta, &v, &grad, &hess);
            // ṽ − {(βG)ᵀ W (βG)}⁻¹ (βG)ᵀ grad
            let bg = indicator(&enc) * beta;
            let w = DMatrix::from_diagonal(&DVector::from_row_slice(&hess));
            let lhs = bg.transpose() * &w * &bg;
            let rhs = bg.transpose() * DVector::from_row_slice(&grad);
            let step = lhs.lu().solve(&rhs).unwrap();
            for ci in 0..c {
                assert_abs_diff_eq!(fast[ci], v[ci] - step[ci], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn beta_update_matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 25;
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let grad: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let hess: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.25)).collect();
        let f = DVector::from_row_slice(&phi);
        let w = DMatrix::from_diagonal(&DVector::from_row_slice(&hess));
        let dense = 0.7 - (f.transpose() * DVector::from_row_slice(&grad))[0]
            / (f.transpose() * w * &f)[0];
        assert_abs_diff_eq!(update_betak_glm(&phi, 0.7, &grad, &hess), dense, epsilon = 1e-10);
        assert_eq!(update_betak_glm(&phi, 0.7, &[0.0; 25], &hess), 0.7);
        assert_eq!(update_intercept(0.3, &[0.0; 4], &[0.2; 4]), 0.3);
    }
}
