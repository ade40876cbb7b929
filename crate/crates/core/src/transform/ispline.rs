//! Monotone spline basis: integrated M-splines (I-splines).
//!
//! For degree `d` and interior knots `κ_1 < … < κ_q` on `[a, b]`, the full knot sequence
//! repeats each boundary knot `d + 1` times. With the degree-`d` B-splines `B_0 … B_{q+d}`
//! on that sequence, the I-spline basis is the set of tail sums
//!
//! ```text
//! I_j(x) = Σ_{l ≥ j} B_l(x),    j = 1 … q + d
//! ```
//!
//! Each `I_j` is the integral from `a` of a normalised M-spline of degree `d - 1`, so it is
//! nondecreasing, equals 0 at `a` and 1 at `b`. Nonnegative combinations are
//! nondecreasing; together with a constant the basis spans all degree-`d` splines on the knots.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineKnots {
    pub degree: usize,
    /// Full nondecreasing knot sequence, boundaries repeated `degree + 1` times.
    pub knots: Vec<f64>,
}

impl SplineKnots {
    pub fn new(degree: usize, lower: f64, upper: f64, interior: &[f64]) -> Self {
        let mut knots = vec![lower; degree + 1];
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat_n(upper, degree + 1));
        SplineKnots { degree, knots }
    }

    pub fn lower(&self) -> f64 {
        self.knots[0]
    }

    pub fn upper(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn interior(&self) -> &[f64] {
        &self.knots[self.degree + 1..self.knots.len() - self.degree - 1]
    }

    /// Number of I-spline basis functions, `degree + interior knots`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.degree - 2
    }

    /// All `dim() + 1` degree-`d` B-splines at `x` (clamped to the boundary interval).
    fn bsplines(&self, x: f64) -> Vec<f64> {
        let t = &self.knots;
        let d = self.degree;
        let nb = t.len() - d - 1;
        let x = x.clamp(self.lower(), self.upper());
        // Knot span index μ with t[μ] <= x < t[μ+1]; the right boundary uses the last
        // nonempty span.
        let mu = if x >= self.upper() {
            nb - 1
        } else {
            (d..nb).rev().find(|&i| t[i] <= x).unwrap_or(d)
        };
        // de Boor's triangular scheme for the d+1 nonzero B-splines on span μ.
        let mut n = vec![0.0; d + 1];
        n[0] = 1.0;
        let mut left = vec![0.0; d + 1];
        let mut right = vec![0.0; d + 1];
        for j in 1..=d {
            left[j] = x - t[mu + 1 - j];
            right[j] = t[mu + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom > 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        let mut out = vec![0.0; nb];
        for (r, v) in n.into_iter().enumerate() {
            out[mu - d + r] = v;
        }
        out
    }

    /// I-spline basis row at `x`; values outside `[lower, upper]` are clamped.
    pub fn basis_row(&self, x: f64) -> Vec<f64> {
        let b = self.bsplines(x);
        let m = self.dim();
        let mut row = vec![0.0; m];
        let mut acc = 0.0;
        for j in (1..=m).rev() {
            acc += b[j];
            row[j - 1] = acc.min(1.0);
        }
        row
    }
}

/// Basis evaluated at the ordered category values.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineBasis {
    pub knots: SplineKnots,
    /// `values.len() × dim` row-major basis matrix.
    pub rows: Vec<Vec<f64>>,
    /// Knots that were dropped because they coincided with a boundary or another knot.
    pub dropped_knots: usize,
}

impl SplineBasis {
    pub fn dim(&self) -> usize {
        self.knots.dim()
    }
}

/// Type-7 quantile of a sorted sample.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Interior knots at the quantiles `j / (q + 1)` of the row-level value distribution.
///
/// `values` are the distinct ordered category values and `counts` their row frequencies.
/// Coinciding knots are collapsed and knots on a boundary are dropped.
pub fn row_quantile_knots(values: &[f64], counts: &[usize], q: usize) -> (Vec<f64>, usize) {
    let rows: Vec<f64> = values
        .iter()
        .zip(counts)
        .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
        .collect();
    let lower = values[0];
    let upper = *values.last().unwrap();
    let mut knots: Vec<f64> = Vec::with_capacity(q);
    let mut dropped = 0;
    for j in 1..=q {
        let k = quantile_sorted(&rows, j as f64 / (q + 1) as f64);
        if k <= lower || k >= upper || knots.last().is_some_and(|&last| k <= last) {
            dropped += 1;
        } else {
            knots.push(k);
        }
    }
    (knots, dropped)
}

pub fn ispline_basis(values: &[f64], counts: &[usize], degree: usize, interior_knots: usize) -> SplineBasis {
    assert!(degree >= 1 && values.len() >= 2);
    let (interior, dropped_knots) = row_quantile_knots(values, counts, interior_knots);
    let knots = SplineKnots::new(degree, values[0], *values.last().unwrap(), &interior);
    let rows = values.iter().map(|&v| knots.basis_row(v)).collect();
    SplineBasis {
        knots,
        rows,
        dropped_knots,
    }
}
