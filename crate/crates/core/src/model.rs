//! Fitted models, their per-variable quantifications, prediction and the model artifact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{
    encode_categories, validate_spec, CategoryEncoding, ColumnKind, Dataset, Family, RawTable,
    ReadOptions, ScalingLevel, ScalingSpec,
};
use crate::error::{Error, Result};
use crate::glm::logistic::sigmoid;
use crate::transform::{ispline_basis, SplineBasis, SplineFit, Standardization};

pub const ARTIFACT_VERSION: u32 = 1;

/// A predictor ready for fitting: encoded, with a validated level and (for splines) a basis.
#[derive(Debug, Clone)]
pub struct PreparedVariable {
    pub name: String,
    pub kind: ColumnKind,
    pub enc: CategoryEncoding,
    pub spec: ScalingSpec,
    pub basis: Option<SplineBasis>,
    pub merge_map: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl PreparedVariable {
    /// Z-scored observed category values, the starting quantification of every level.
    pub fn initial_quantification(&self) -> Result<(Vec<f64>, Standardization)> {
        let s = Standardization::fit(&self.enc.values, &self.enc.counts_f64()).map_err(|_| {
            Error::TooFewCategories {
                column: self.name.clone(),
                found: self.enc.num_categories(),
            }
        })?;
        Ok((s.apply_all(&self.enc.values), s))
    }
}

/// Encode every predictor of `ds` and validate its scaling spec. `specs` is aligned with
/// `ds.predictors`.
pub fn prepare(ds: &Dataset, specs: &[ScalingSpec]) -> Result<Vec<PreparedVariable>> {
    if specs.len() != ds.p() {
        return Err(Error::Config(format!(
            "{} scaling specs for {} predictors",
            specs.len(),
            ds.p()
        )));
    }
    ds.predictors
        .iter()
        .zip(specs)
        .map(|(col, &spec)| {
            let enc = encode_categories(col)?;
            let checked = validate_spec(spec, &enc, col.kind).map_err(|reason| {
                Error::InvalidSpec {
                    column: col.name.clone(),
                    reason,
                }
            })?;
            let mut notes: Vec<String> = checked.note.into_iter().collect();
            let spec = checked.spec;
            let basis = if spec.level.is_spline() {
                let b = ispline_basis(&enc.values, &enc.counts, spec.degree, spec.interior_knots);
                if b.dropped_knots > 0 {
                    notes.push(format!(
                        "{} interior knot(s) dropped (tied data); basis dimension {}",
                        b.dropped_knots,
                        b.dim()
                    ));
                }
                Some(b)
            } else {
                None
            };
            Ok(PreparedVariable {
                name: col.name.clone(),
                kind: col.kind,
                enc,
                spec,
                basis,
                merge_map: col.merge_map.clone(),
                notes,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GlmOs,
    LinearOs,
    DummyLogistic,
}

/// Quantification of one predictor.
///
/// For optimal-scaling fits `v` is standardized over the training rows and `standardization`
/// maps the unstandardized transform (raw value for numeric levels, spline value for spline
/// levels) onto it. For dummy-coded fits a nominal variable stores its dummy coefficients in
/// `v` (reference category 0) with coefficient 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantificationSet {
    pub name: String,
    pub kind: ColumnKind,
    pub spec: ScalingSpec,
    pub labels: Vec<String>,
    pub members: Vec<Vec<String>>,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
    pub v: Vec<f64>,
    pub standardization: Standardization,
    pub spline: Option<SplineFit>,
    #[serde(default)]
    pub merge_map: BTreeMap<String, String>,
}

impl QuantificationSet {
    pub fn new(
        var: &PreparedVariable,
        v: Vec<f64>,
        standardization: Standardization,
        spline: Option<SplineFit>,
    ) -> Self {
        QuantificationSet {
            name: var.name.clone(),
            kind: var.kind,
            spec: var.spec,
            labels: var.enc.labels.clone(),
            members: var.enc.members.clone(),
            values: var.enc.values.clone(),
            counts: var.enc.counts.clone(),
            v,
            standardization,
            spline,
            merge_map: var.merge_map.clone(),
        }
    }

    fn find(&self, label: &str) -> Option<usize> {
        let label = self.merge_map.get(label).map_or(label, String::as_str);
        self.members
            .iter()
            .position(|m| m.iter().any(|l| l == label))
            .or_else(|| self.labels.iter().position(|l| l == label))
    }

    /// Transformed value of one raw cell and whether it fell outside the training categories
    /// in a way that could not be evaluated. `None` is a missing cell.
    pub fn transform(&self, raw: Option<&str>) -> (f64, bool) {
        let Some(raw) = raw.map(str::trim) else {
            return (0.0, true);
        };
        if let Some(c) = self.find(raw) {
            return (self.v[c], false);
        }
        let x = crate::data::parse_finite(raw);
        match (self.spec.level, x) {
            (ScalingLevel::Numeric, Some(x)) => (self.standardization.apply(x), false),
            (level, Some(x)) if level.is_spline() => match &self.spline {
                Some(s) => (self.standardization.apply(s.eval(x)), false),
                None => (0.0, true),
            },
            _ => (0.0, true),
        }
    }

    /// Flip the sign of the quantification so that the transform reads the other way.
    pub(crate) fn negate(&mut self) {
        for v in &mut self.v {
            *v = -*v;
        }
        self.standardization = self.standardization.negated();
        if let Some(s) = &self.spline {
            self.spline = Some(s.negated());
        }
    }
}

/// How a safeguarded update was finally resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepAction {
    /// The Newton step was accepted after `halvings` halvings.
    Halved,
    /// The Newton step failed; the quantification was updated by the majorization step.
    Majorized,
    /// Only the coefficient moved; the quantification was kept.
    CoefficientOnly,
    /// Nothing improved the loss and the term was left unchanged.
    Reverted,
}

/// One safeguard activation during fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEvent {
    pub cycle: usize,
    /// Coefficient index: 0 is the intercept, `k` the `k`th predictor.
    pub variable: usize,
    pub halvings: usize,
    pub action: StepAction,
}

impl FitEvent {
    pub fn reverted(&self) -> bool {
        self.action == StepAction::Reverted
    }
}

impl std::fmt::Display for FitEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "cycle {}: update of term {} ", self.cycle, self.variable)?;
        match self.action {
            StepAction::Halved => write!(f, "accepted after {} halving(s)", self.halvings),
            StepAction::Majorized => write!(f, "fell back to the majorization step"),
            StepAction::CoefficientOnly => write!(f, "kept the quantification, coefficient only"),
            StepAction::Reverted => write!(f, "reverted after {} halvings", self.halvings),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub version: u32,
    pub method: Method,
    pub family: Family,
    pub response: String,
    pub intercept: f64,
    /// Coefficient of every predictor, aligned with `quantifications`.
    pub beta: Vec<f64>,
    pub quantifications: Vec<QuantificationSet>,
    /// Loss after initialization and after every cycle.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub cycles: usize,
    pub events: Vec<FitEvent>,
    /// Per-variable remarks: downgraded levels, dropped knots, degenerate updates.
    pub notes: Vec<String>,
    pub warnings: Vec<String>,
}

/// Per-row output of [`FittedModel::predict_dataset`] and friends.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub eta: Vec<f64>,
    /// Probabilities for logistic models; equal to `eta` for the linear family.
    pub fitted: Vec<f64>,
    pub unseen: Vec<bool>,
}

impl FittedModel {
    pub fn quantification(&self, name: &str) -> Option<&QuantificationSet> {
        self.quantifications.iter().find(|q| q.name == name)
    }

    /// Predict from per-variable raw columns, aligned with `quantifications`.
    fn predict_columns(&self, columns: &[Vec<Option<&str>>], n: usize) -> Prediction {
        let mut eta = vec![self.intercept; n];
        let mut unseen = vec![false; n];
        for ((q, beta), col) in self.quantifications.iter().zip(&self.beta).zip(columns) {
            for i in 0..n {
                let (x, flag) = q.transform(col[i]);
                eta[i] += beta * x;
                unseen[i] |= flag;
            }
        }
        let fitted = match self.family {
            Family::Logistic => eta.iter().map(|&e| sigmoid(e)).collect(),
            Family::LinearOs => eta.clone(),
        };
        Prediction {
            eta,
            fitted,
            unseen,
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Prediction> {
        let columns = self
            .quantifications
            .iter()
            .map(|q| {
                let col = ds
                    .column(&q.name)
                    .ok_or_else(|| Error::UnknownColumn(q.name.clone()))?;
                Ok(col.raw.iter().map(|s| Some(s.as_str())).collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(self.predict_columns(&columns, ds.n()))
    }

    /// Predict every row of a raw table; missing cells count as unseen categories.
    pub fn predict_table(&self, table: &RawTable, opts: &ReadOptions) -> Result<Prediction> {
        if table.rows.is_empty() {
            return Ok(self.predict_columns(&vec![Vec::new(); self.quantifications.len()], 0));
        }
        let columns = self
            .quantifications
            .iter()
            .map(|q| {
                let j = table
                    .column_index(&q.name)
                    .ok_or_else(|| Error::UnknownColumn(q.name.clone()))?;
                Ok(table
                    .rows
                    .iter()
                    .map(|r| {
                        r.get(j)
                            .map(String::as_str)
                            .filter(|s| !opts.is_missing(s))
                    })
                    .collect())
            })
            .collect::<Result<Vec<Vec<_>>>>()?;
        Ok(self.predict_columns(&columns, table.rows.len()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Artifact(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(ARTIFACT_VERSION) => {}
            Some(v) => return Err(Error::Artifact(format!("unsupported version {v}"))),
            None => return Err(Error::Artifact("missing version field".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

/// Encode `ds`, validate `specs` and fit with `method`.
pub fn fit_model(
    ds: &Dataset,
    specs: &[ScalingSpec],
    method: Method,
    opts: &crate::glm::FitOptions,
) -> Result<FittedModel> {
    let vars = prepare(ds, specs)?;
    match method {
        Method::GlmOs => crate::glm::glm_os_fit(ds, &vars, opts),
        Method::LinearOs => crate::os_linear::os_linear_fit(ds, &vars, opts),
        Method::DummyLogistic => {
            crate::glm::dummy_logistic_model(ds, &vars, opts.tol.min(1e-10), DUMMY_MAX_ITER)
        }
    }
}

/// Newton iterations allowed for dummy-coded fits.
pub const DUMMY_MAX_ITER: usize = 100;
