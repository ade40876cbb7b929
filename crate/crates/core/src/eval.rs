//! Apparent and cross-validated prediction error.
//!
//! The prediction error is the Brier score `(1/m) Σ (y_i − π_i)²` by default, or the mean
//! deviance. The misclassification rate uses the threshold `π ≥ 0.5`.

use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::FittedModel;

pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Brier,
    Deviance,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "brier" => Ok(Metric::Brier),
            "deviance" => Ok(Metric::Deviance),
            other => Err(format!("unknown metric `{other}` (expected brier or deviance)")),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Brier => "brier",
            Metric::Deviance => "deviance",
        })
    }
}

/// Brier score.
pub fn prediction_error(pi: &[f64], y: &[f64]) -> f64 {
    assert_eq!(pi.len(), y.len());
    pi.iter().zip(y).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / pi.len() as f64
}

/// Mean binomial deviance `−(2/m) Σ [y log π + (1 − y) log(1 − π)]`.
pub fn mean_deviance(pi: &[f64], y: &[f64]) -> f64 {
    assert_eq!(pi.len(), y.len());
    -2.0 * pi
        .iter()
        .zip(y)
        .map(|(p, y)| y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        .sum::<f64>()
        / pi.len() as f64
}

pub fn metric_value(metric: Metric, pi: &[f64], y: &[f64]) -> f64 {
    match metric {
        Metric::Brier => prediction_error(pi, y),
        Metric::Deviance => mean_deviance(pi, y),
    }
}

pub fn classify(p: f64) -> u8 {
    u8::from(p >= THRESHOLD)
}

fn misclassified(pi: &[f64], y: &[f64]) -> usize {
    pi.iter()
        .zip(y)
        .filter(|(p, y)| f64::from(classify(**p)) != **y)
        .count()
}

/// Percentage of rows whose thresholded prediction differs from `y`.
pub fn misclassification_rate(pi: &[f64], y: &[f64]) -> f64 {
    100.0 * misclassified(pi, y) as f64 / pi.len() as f64
}

/// Fold index in `0..k` for every row.
///
/// Stratified assignment shuffles each class separately and deals its rows round-robin,
/// continuing the deal from one class to the next, so every fold gets either `⌊m/k⌋` or
/// `⌈m/k⌉` rows of a class with `m` rows.
pub fn split_folds(y: &[f64], k: usize, seed: u64, stratified: bool) -> Result<Vec<usize>> {
    let n = y.len();
    if k < 2 {
        return Err(Error::Folds(format!("need at least 2 folds, got {k}")));
    }
    if k > n {
        return Err(Error::Folds(format!("{k} folds for {n} rows")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<Vec<usize>> = if stratified {
        let mut classes: Vec<f64> = y.to_vec();
        classes.sort_by(f64::total_cmp);
        classes.dedup();
        classes
            .iter()
            .map(|c| (0..n).filter(|&i| y[i] == *c).collect::<Vec<_>>())
            .collect()
    } else {
        vec![(0..n).collect()]
    };
    if stratified {
        if let Some(small) = groups.iter().find(|g| g.len() < k) {
            return Err(Error::Folds(format!(
                "class with {} rows cannot be stratified over {k} folds",
                small.len()
            )));
        }
    }
    let mut fold = vec![0; n];
    let mut next = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            fold[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub size: usize,
    /// `None` when the fold's fit failed.
    pub error: Option<f64>,
    pub misclassified: usize,
    pub unseen_rows: usize,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub label: String,
    pub metric: Metric,
    pub ape: f64,
    pub epe: f64,
    pub se_epe: f64,
    /// Misclassification percentage over all test rows of the successful folds.
    pub mcr: f64,
    /// Misclassification percentage of the full-data fit on its own rows.
    pub apparent_mcr: f64,
    pub folds: usize,
    pub seed: u64,
    pub per_fold: Vec<FoldResult>,
}

impl CvReport {
    pub fn failed_folds(&self) -> Vec<usize> {
        self.per_fold
            .iter()
            .filter(|f| f.error.is_none())
            .map(|f| f.fold)
            .collect()
    }
}

/// Options for [`cross_validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
    pub metric: Metric,
}

/// Fit on the full data and on every training fold with `fit`, and score the held-out rows.
///
/// `fit` receives a dataset and must encode it from scratch, so categories absent from a
/// training fold are handled by prediction's unseen-category rule. Folds are fitted in
/// parallel; the report does not depend on scheduling.
pub fn cross_validate<F>(ds: &Dataset, label: &str, opts: &CvOptions, fit: F) -> Result<CvReport>
where
    F: Fn(&Dataset) -> Result<FittedModel> + Sync,
{
    let full = fit(ds)?;
    let pred = full.predict_dataset(ds)?;
    let ape = metric_value(opts.metric, &pred.fitted, &ds.y);
    let apparent_mcr = misclassification_rate(&pred.fitted, &ds.y);

    let assignment = split_folds(&ds.y, opts.folds, opts.seed, opts.stratified)?;
    let per_fold: Vec<FoldResult> = (0..opts.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..ds.n()).filter(|&i| assignment[i] != f).collect();
            let test: Vec<usize> = (0..ds.n()).filter(|&i| assignment[i] == f).collect();
            let test_ds = ds.subset(&test);
            let scored = fit(&ds.subset(&train)).and_then(|m| m.predict_dataset(&test_ds));
            match scored {
                Ok(p) => FoldResult {
                    fold: f,
                    size: test.len(),
                    error: Some(metric_value(opts.metric, &p.fitted, &test_ds.y)),
                    misclassified: misclassified(&p.fitted, &test_ds.y),
                    unseen_rows: p.unseen.iter().filter(|&&u| u).count(),
                    message: None,
                },
                Err(e) => FoldResult {
                    fold: f,
                    size: test.len(),
                    error: None,
                    misclassified: 0,
                    unseen_rows: 0,
                    message: Some(e.to_string()),
                },
            }
        })
        .collect();

    let ok: Vec<&FoldResult> = per_fold.iter().filter(|f| f.error.is_some()).collect();
    if ok.is_empty() {
        return Err(Error::Folds(format!(
            "every fold failed; first error: {}",
            per_fold[0].message.as_deref().unwrap_or("unknown")
        )));
    }
    let rows: usize = ok.iter().map(|f| f.size).sum();
    let epe = ok
        .iter()
        .map(|f| f.size as f64 * f.error.unwrap())
        .sum::<f64>()
        / rows as f64;
    let k = ok.len() as f64;
    let se_epe = if ok.len() > 1 {
        let mean = ok.iter().map(|f| f.error.unwrap()).sum::<f64>() / k;
        let var = ok
            .iter()
            .map(|f| (f.error.unwrap() - mean).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        (var / k).sqrt()
    } else {
        f64::NAN
    };
    let mcr = 100.0 * ok.iter().map(|f| f.misclassified).sum::<usize>() as f64 / rows as f64;
    Ok(CvReport {
        label: label.to_string(),
        metric: opts.metric,
        ape,
        epe,
        se_epe,
        mcr,
        apparent_mcr,
        folds: opts.folds,
        seed: opts.seed,
        per_fold,
    })
}

/// One row of a comparison table: a report or the error that prevented it.
pub type TableRow = (String, std::result::Result<CvReport, String>);

/// Write the comparison table: model, APE, EPE, SE(EPE), MCR(%), plus bookkeeping columns.
pub fn write_cv_table<W: Write>(mut out: W, rows: &[TableRow]) -> std::io::Result<()> {
    writeln!(out, "model,metric,ape,epe,se_epe,mcr_percent,folds,seed,failed_folds,note")?;
    for (label, row) in rows {
        match row {
            Ok(r) => {
                let failed = r.failed_folds();
                let note = if failed.is_empty() {
                    String::new()
                } else {
                    "folds excluded after fit failure".to_string()
                };
                writeln!(
                    out,
                    "{},{},{:.6},{:.6},{:.6},{:.2},{},{},{},{}",
                    csv_field(label),
                    r.metric,
                    r.ape,
                    r.epe,
                    r.se_epe,
                    r.mcr,
                    r.folds,
                    r.seed,
                    failed
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                    note
                )?;
            }
            Err(e) => writeln!(out, "{},,,,,,,,,{}", csv_field(label), csv_field(&format!("error: {e}")))?,
        }
    }
    Ok(())
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
