//! Logistic family: probabilities, negative log-likelihood and its derivatives in `η`.
//!
//! Newton-Raphson and Fisher scoring coincide for the canonical logit link, so there is a
//! single code path.

/// Probabilities are clamped to `[EPS_P, 1 - EPS_P]`.
pub const EPS_P: f64 = 1e-12;
/// Floor on the diagonal Hessian entries.
pub const EPS_H: f64 = 1e-10;

/// Overflow-safe inverse logit, clamped.
pub fn sigmoid(eta: f64) -> f64 {
    let p = if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    };
    p.clamp(EPS_P, 1.0 - EPS_P)
}

pub fn logistic_pi(eta: &[f64]) -> Vec<f64> {
    eta.iter().map(|&e| sigmoid(e)).collect()
}

/// `log(1 + exp(η))` without overflow.
fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// `Σ log(1 + exp(η_i)) − Σ y_i η_i`.
pub fn neg_loglik(eta: &[f64], y: &[f64]) -> f64 {
    eta.iter().zip(y).map(|(&e, &yi)| softplus(e) - yi * e).sum()
}

/// Gradient `π − y` and clamped diagonal Hessian `π(1 − π)` of [`neg_loglik`] in `η`.
pub fn gradient_hessian(eta: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut grad = Vec::with_capacity(eta.len());
    let mut hess = Vec::with_capacity(eta.len());
    for (&e, &yi) in eta.iter().zip(y) {
        let p = sigmoid(e);
        grad.push(p - yi);
        hess.push((p * (1.0 - p)).max(EPS_H));
    }
    (grad, hess)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
