//! Weighted least squares with nonnegative coefficients and a free intercept.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance on the dual (negative gradient) entries.
const DUAL_TOL: f64 = 1e-12;
/// Diagonal jitter for rank-deficient normal equations.
const JITTER: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearFit {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(b, a)| b * a)
                .sum::<f64>()
    }
}

/// Solve the normal equations `(AᵀA) x = Aᵀb`, adding jitter when `AᵀA` is not positive
/// definite.
pub(crate) fn solve_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let ata = a.transpose() * a;
    let atb = a.transpose() * b;
    solve_spd(ata, &atb)
}

pub(crate) fn solve_spd(mut m: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = m.clone().cholesky() {
        return ch.solve(rhs);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)]).fold(1.0_f64, f64::max);
    for i in 0..m.nrows() {
        m[(i, i)] += JITTER * scale;
    }
    match m.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => m
            .svd(true, true)
            .solve(rhs, 1e-12)
            .unwrap_or_else(|_| DVector::zeros(rhs.len())),
    }
}

/// Lawson–Hanson active-set solution of `min ‖A x − b‖²` subject to `x ≥ 0`.
pub fn nnls_plain(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let atb = a.transpose() * b;
    let tol = DUAL_TOL * atb.amax().max(1.0);
    let dual = |x: &DVector<f64>| a.transpose() * (b - a * x);

    for _ in 0..(3 * n + 10) {
        let w = dual(&x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate.filter(|&j| w[j] > tol) else {
            break;
        };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = a.select_columns(&idx);
            let s_sub = solve_least_squares(&sub, b);
            if s_sub.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &col) in idx.iter().enumerate() {
                    x[col] = s_sub[k];
                }
                break;
            }
            // Step from x toward s until the first passive coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (k, &col) in idx.iter().enumerate() {
                if s_sub[k] <= 0.0 {
                    let denom = x[col] - s_sub[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[col] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = if alpha.is_finite() { alpha } else { 0.0 };
            for (k, &col) in idx.iter().enumerate() {
                x[col] += alpha * (s_sub[k] - x[col]);
            }
            for &col in &idx {
                if x[col] <= 1e-15 * x.amax().max(1.0) {
                    x[col] = 0.0;
                    passive[col] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x.apply(|v| *v = v.max(0.0));
    x
}

/// Centre the columns of `rows` and `target` with weights, then scale rows by `√w`.
fn weighted_centered(
    rows: &[Vec<f64>],
    target: &[f64],
    weights: &[f64],
) -> (DMatrix<f64>, DVector<f64>, Vec<f64>, f64) {
    let m = rows.first().map_or(0, Vec::len);
    let total: f64 = weights.iter().sum();
    let col_means: Vec<f64> = (0..m)
        .map(|j| {
            rows.iter()
                .zip(weights)
                .map(|(r, w)| w * r[j])
                .sum::<f64>()
                / total
        })
        .collect();
    let t_mean = target.iter().zip(weights).map(|(t, w)| t * w).sum::<f64>() / total;
    let a = DMatrix::from_fn(rows.len(), m, |i, j| {
        weights[i].sqrt() * (rows[i][j] - col_means[j])
    });
    let b = DVector::from_fn(rows.len(), |i, _| weights[i].sqrt() * (target[i] - t_mean));
    (a, b, col_means, t_mean)
}

/// `min Σ w_i (target_i − a₀ − Σ_j B_ij a_j)²` subject to `a_j ≥ 0`; `a₀` is free.
pub fn nnls(rows: &[Vec<f64>], target: &[f64], weights: &[f64]) -> LinearFit {
    let (a, b, col_means, t_mean) = weighted_centered(rows, target, weights);
    let x = nnls_plain(&a, &b);
    finish(x, &col_means, t_mean)
}

/// Unconstrained weighted least squares with intercept.
pub fn weighted_least_squares(rows: &[Vec<f64>], target: &[f64], weights: &[f64]) -> LinearFit {
    let (a, b, col_means, t_mean) = weighted_centered(rows, target, weights);
    let x = solve_least_squares(&a, &b);
    finish(x, &col_means, t_mean)
}

fn finish(x: DVector<f64>, col_means: &[f64], t_mean: f64) -> LinearFit {
    let coefficients: Vec<f64> = x.iter().copied().collect();
    let intercept = t_mean
        - coefficients
            .iter()
            .zip(col_means)
            .map(|(a, m)| a * m)
            .sum::<f64>();
    LinearFit {
        intercept,
        coefficients,
    }
}
