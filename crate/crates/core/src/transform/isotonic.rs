//! Weighted isotonic regression by pool-adjacent-violators.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Weighted least-squares projection of `target` onto the monotone cone.
///
/// Minimises `Σ w_c (target_c - out_c)²` over vectors monotone in `direction`. Pooled blocks
/// take the weighted mean of their members.
pub fn weighted_isotonic(target: &[f64], weights: &[f64], direction: Direction) -> Vec<f64> {
    assert_eq!(target.len(), weights.len());
    let sign = match direction {
        Direction::Increasing => 1.0,
        Direction::Decreasing => -1.0,
    };
    // Stack of blocks: (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(target.len());
    for (&t, &w) in target.iter().zip(weights) {
        let mut cur = (sign * t, w, 1usize);
        while let Some(&(m, bw, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = bw + cur.1;
            cur = ((m * bw + cur.0 * cur.1) / tw, tw, len + cur.2);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(target.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat_n(sign * m, len));
    }
    out
}

/// Weighted sum of squared differences.
pub fn weighted_sse(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(w)
        .map(|((x, y), w)| w * (x - y) * (x - y))
        .sum()
}
