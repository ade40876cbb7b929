//! Independent reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use glmos::config::RunConfig;
use glmos::data::{ColumnKind, Dataset, VariableColumn};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// A shipped config and its data, with the configured rare-category merge applied.
pub fn shipped(name: &str) -> (RunConfig, Dataset) {
    let path = repo_root().join("configs").join(format!("{name}.toml"));
    let cfg = RunConfig::load(&path).unwrap();
    let (ds, _) = cfg.load_data(path.parent().unwrap()).unwrap();
    (cfg, ds)
}

/// Least-squares monotone fit by exhaustive search over contiguous partitions.
///
/// The solution of the isotonic problem is constant on blocks of consecutive categories with
/// the weighted block mean as its value. Every one of the `2^(C-1)` partitions is scored and
/// the best partition whose block means are monotone wins.
pub fn isotonic_oracle(target: &[f64], weights: &[f64], increasing: bool) -> Vec<f64> {
    let c = target.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (c - 1)) {
        let mut fit = vec![0.0; c];
        let mut start = 0;
        for end in 1..=c {
            let cut = end == c || mask & (1 << (end - 1)) != 0;
            if !cut {
                continue;
            }
            let w: f64 = weights[start..end].iter().sum();
            let m = (start..end).map(|i| weights[i] * target[i]).sum::<f64>() / w;
            fit[start..end].iter_mut().for_each(|f| *f = m);
            start = end;
        }
        let ok = fit.windows(2).all(|p| if increasing { p[0] <= p[1] } else { p[0] >= p[1] });
        if !ok {
            continue;
        }
        let sse: f64 = (0..c).map(|i| weights[i] * (target[i] - fit[i]).powi(2)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, fit));
        }
    }
    best.unwrap().1
}

/// Weighted least squares with a free intercept on the columns in `active`, via the normal
/// equations.
fn subset_fit(rows: &[Vec<f64>], y: &[f64], w: &[f64], active: &[usize]) -> Option<(f64, Vec<f64>)> {
    let n = rows.len();
    let p = active.len() + 1;
    let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { rows[i][active[j - 1]] });
    let wm = DMatrix::from_diagonal(&DVector::from_row_slice(w));
    let xtw = x.transpose() * wm;
    let beta = (&xtw * &x).lu().solve(&(&xtw * DVector::from_row_slice(y)))?;
    Some((beta[0], beta.iter().skip(1).copied().collect()))
}

/// Nonnegative least squares with a free intercept, by enumerating every active set.
///
/// Returns `(intercept, coefficients)`. The optimum is the unconstrained fit on its support,
/// so the best fit among supports with nonnegative coefficients is the solution.
pub fn nnls_oracle(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> (f64, Vec<f64>) {
    let m = rows[0].len();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let Some((a0, a)) = subset_fit(rows, y, w, &active) else {
            continue;
        };
        if a.iter().any(|&x| x < -1e-12) {
            continue;
        }
        let mut coef = vec![0.0; m];
        for (j, &k) in active.iter().enumerate() {
            coef[k] = a[j].max(0.0);
        }
        let sse: f64 = rows
            .iter()
            .zip(y)
            .zip(w)
            .map(|((r, yi), wi)| {
                let f = a0 + r.iter().zip(&coef).map(|(b, c)| b * c).sum::<f64>();
                wi * (yi - f).powi(2)
            })
            .sum();
        if best.as_ref().is_none_or(|(b, _, _)| sse < *b) {
            best = Some((sse, a0, coef));
        }
    }
    let (_, a0, coef) = best.unwrap();
    (a0, coef)
}

/// Plain Newton–Raphson logistic regression on a design that already holds its intercept
/// column. No step control; meant for well-conditioned problems.
pub fn irls_oracle(x: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let (n, p) = x.shape();
    let y = DVector::from_row_slice(y);
    let mut b = DVector::zeros(p);
    for _ in 0..100 {
        let eta = x * &b;
        let pi = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        let w = pi.map(|p| p * (1.0 - p));
        let score = x.transpose() * (&y - &pi);
        let mut info = DMatrix::zeros(p, p);
        for i in 0..n {
            let row = x.row(i);
            info += row.transpose() * row * w[i];
        }
        let step = info.cholesky().expect("information matrix").solve(&score);
        b += &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    b
}

pub fn sigmoid(e: f64) -> f64 {
    1.0 / (1.0 + (-e).exp())
}

/// Population z-score with divisor `n`.
pub fn zscore(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
    x.iter().map(|v| (v - m) / s).collect()
}

/// Random categorical dataset. `levels[k]` is the number of categories of predictor `k`; every
/// category occurs and both outcomes occur in every category, which keeps all fits finite.
pub fn random_categorical(rng: &mut impl Rng, n: usize, levels: &[usize], kind: ColumnKind) -> Dataset {
    let mut y = vec![0.0; n];
    let mut cols: Vec<Vec<usize>> = levels.iter().map(|_| vec![0; n]).collect();
    let effects: Vec<Vec<f64>> = levels
        .iter()
        .map(|&c| (0..c).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    for i in 0..n {
        let mut eta = -0.2;
        for (k, &c) in levels.iter().enumerate() {
            // The first 2c rows cover every (category, outcome) pair.
            let g = if i < 2 * c { i / 2 } else { rng.random_range(0..c) };
            cols[k][i] = g;
            eta += effects[k][g];
        }
        y[i] = if i < 2 * levels.iter().max().unwrap() {
            (i % 2) as f64
        } else {
            f64::from(u8::from(rng.random::<f64>() < sigmoid(eta)))
        };
    }
    Dataset {
        response_name: "y".into(),
        y,
        predictors: cols
            .into_iter()
            .enumerate()
            .map(|(k, g)| {
                VariableColumn::new(
                    format!("x{k}"),
                    kind,
                    g.iter().map(|c| (c + 1).to_string()).collect(),
                )
            })
            .collect(),
        dropped_rows: 0,
    }
}

/// Map a dataset column through a label permutation.
pub fn relabel(ds: &Dataset, column: usize, f: impl Fn(&str) -> String) -> Dataset {
    let mut out = ds.clone();
    let col = &mut out.predictors[column];
    col.raw = col.raw.iter().map(|s| f(s)).collect();
    out
}

/// I-spline basis at `x` from the textbook Cox–de Boor recursion on the full knot sequence.
/// Half-open spans, so `x` must lie below the upper boundary.
pub fn ispline_oracle(knots: &[f64], degree: usize, x: f64) -> Vec<f64> {
    fn b(t: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            return if t[i] <= x && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        let mut out = 0.0;
        if t[i + p] > t[i] {
            out += (x - t[i]) / (t[i + p] - t[i]) * b(t, i, p - 1, x);
        }
        if t[i + p + 1] > t[i + 1] {
            out += (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * b(t, i + 1, p - 1, x);
        }
        out
    }
    let nb = knots.len() - degree - 1;
    let bs: Vec<f64> = (0..nb).map(|i| b(knots, i, degree, x)).collect();
    (1..nb).map(|j| bs[j..].iter().sum()).collect()
}
