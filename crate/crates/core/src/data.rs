//! Tabular ingestion and compact indicator encodings.
//!
//! An indicator matrix `G_k` (one row per observation, one column per category) is never
//! materialised. A [`CategoryEncoding`] stores the per-row category index together with the
//! per-category counts, which are the diagonal of `G_kᵀ G_k`.
//!
//! Category indices are 0-based. Ordered and continuous columns are indexed in increasing
//! value order; unordered columns in order of first appearance.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declared measurement level of a predictor column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    UnorderedCategorical,
    OrderedCategorical,
    Continuous,
    Binary,
}

impl ColumnKind {
    pub fn is_unordered(self) -> bool {
        matches!(self, ColumnKind::UnorderedCategorical)
    }

    /// Kinds whose categories may be merged by [`Dataset::merge_rare`].
    pub fn is_mergeable(self) -> bool {
        matches!(
            self,
            ColumnKind::UnorderedCategorical | ColumnKind::OrderedCategorical
        )
    }
}

/// Transformation family applied to a predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingLevel {
    Numeric,
    NominalStep,
    OrdinalStep,
    SplineNonmonotone,
    SplineMonotone,
}

impl ScalingLevel {
    pub fn is_spline(self) -> bool {
        matches!(
            self,
            ScalingLevel::SplineNonmonotone | ScalingLevel::SplineMonotone
        )
    }

    pub fn is_monotone(self) -> bool {
        matches!(self, ScalingLevel::OrdinalStep | ScalingLevel::SplineMonotone)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingLevel::Numeric => "numeric",
            ScalingLevel::NominalStep => "nominal-step",
            ScalingLevel::OrdinalStep => "ordinal-step",
            ScalingLevel::SplineNonmonotone => "spline-nonmonotone",
            ScalingLevel::SplineMonotone => "spline-monotone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub level: ScalingLevel,
    /// Polynomial degree of the spline pieces. Ignored for non-spline levels.
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub interior_knots: usize,
}

fn default_degree() -> usize {
    2
}

impl ScalingSpec {
    pub fn new(level: ScalingLevel) -> Self {
        ScalingSpec {
            level,
            degree: default_degree(),
            interior_knots: 0,
        }
    }

    pub fn spline(level: ScalingLevel, degree: usize, interior_knots: usize) -> Self {
        ScalingSpec {
            level,
            degree,
            interior_knots,
        }
    }
}

/// Response distribution of the model being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    #[default]
    Logistic,
    LinearOs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableColumn {
    pub name: String,
    pub kind: ColumnKind,
    /// Observed values, verbatim.
    pub raw: Vec<String>,
    /// Explicit level order for ordered categorical columns.
    pub level_order: Option<Vec<String>>,
    /// Original label -> merged label, filled by [`Dataset::merge_rare`].
    pub merge_map: BTreeMap<String, String>,
}

impl VariableColumn {
    pub fn new(name: impl Into<String>, kind: ColumnKind, raw: Vec<String>) -> Self {
        VariableColumn {
            name: name.into(),
            kind,
            raw,
            level_order: None,
            merge_map: BTreeMap::new(),
        }
    }

    fn subset(&self, rows: &[usize]) -> Self {
        VariableColumn {
            raw: rows.iter().map(|&i| self.raw[i].clone()).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub response_name: String,
    pub y: Vec<f64>,
    pub predictors: Vec<VariableColumn>,
    /// Rows removed by listwise deletion while loading.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.predictors.len()
    }

    pub fn column(&self, name: &str) -> Option<&VariableColumn> {
        self.predictors.iter().find(|c| c.name == name)
    }

    /// Rows `rows` (in the given order) as a new dataset.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            response_name: self.response_name.clone(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            predictors: self.predictors.iter().map(|c| c.subset(rows)).collect(),
            dropped_rows: 0,
        }
    }

    /// Keep only the named predictors, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Dataset> {
        let predictors = names
            .iter()
            .map(|n| {
                self.column(n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownColumn(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            predictors,
            ..self.clone()
        })
    }

    /// Merge categories observed fewer than `min_count` times in every categorical column.
    ///
    /// The merge is recorded in each column's `merge_map` and applied to the raw labels, so
    /// later re-encodings (for example on cross-validation folds) see the merged categories.
    /// Continuous and binary columns are left alone. Returns one note per merge performed.
    pub fn merge_rare(&self, min_count: usize) -> Result<(Dataset, Vec<String>)> {
        let mut out = self.clone();
        let mut notes = Vec::new();
        if min_count <= 1 {
            return Ok((out, notes));
        }
        for col in out.predictors.iter_mut().filter(|c| c.kind.is_mergeable()) {
            let enc = encode_categories(col)?;
            let merged = merge_rare_categories(&enc, min_count, col.kind)
                .map_err(|e| with_column(e, &col.name))?;
            if merged.num_categories() == enc.num_categories() {
                continue;
            }
            let mut map = BTreeMap::new();
            for (label, members) in merged.labels.iter().zip(&merged.members) {
                if members.len() > 1 {
                    notes.push(format!(
                        "{}: merged categories {{{}}} (fewer than {} observations)",
                        col.name,
                        members.join(", "),
                        min_count
                    ));
                    for m in members {
                        map.insert(m.clone(), label.clone());
                    }
                }
            }
            for v in col.raw.iter_mut() {
                if let Some(m) = map.get(v) {
                    *v = m.clone();
                }
            }
            if let Some(order) = col.level_order.take() {
                let mut merged_order: Vec<String> = Vec::new();
                for l in order {
                    let l = map.get(&l).cloned().unwrap_or(l);
                    if !merged_order.contains(&l) {
                        merged_order.push(l);
                    }
                }
                col.level_order = Some(merged_order);
            }
            col.merge_map.extend(map);
        }
        Ok((out, notes))
    }
}

fn with_column(e: Error, column: &str) -> Error {
    match e {
        Error::TooFewCategories { found, .. } => Error::TooFewCategories {
            column: column.to_string(),
            found,
        },
        Error::InvalidSpec { reason, .. } => Error::InvalidSpec {
            column: column.to_string(),
            reason,
        },
        other => other,
    }
}

/// Declared schema entry for one predictor column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub levels: Option<Vec<String>>,
}

/// How to turn the response column into `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSpec {
    pub column: String,
    /// Labels coded as `y = 1`; everything else is `y = 0`. When absent, the response is
    /// parsed as a number (and must be 0/1 for the logistic family).
    pub positive: Option<Vec<String>>,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub missing: Vec<String>,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            missing: vec![String::new(), "NA".to_string()],
        }
    }
}

impl ReadOptions {
    pub fn is_missing(&self, s: &str) -> bool {
        let t = s.trim();
        self.missing.iter().any(|m| m == t)
    }
}

pub fn load_dataset(
    path: &Path,
    columns: &[ColumnSchema],
    response: &ResponseSpec,
    opts: &ReadOptions,
) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, columns, response, opts)
}

/// Header-first delimited text -> [`Dataset`], with listwise deletion over the used columns.
pub fn read_dataset<R: Read>(
    reader: R,
    columns: &[ColumnSchema],
    response: &ResponseSpec,
    opts: &ReadOptions,
) -> Result<Dataset> {
    let table = read_table(reader, opts.delimiter)?;
    let find = |name: &str| -> Result<usize> {
        table
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let y_idx = find(&response.column)?;
    let col_idx = columns
        .iter()
        .map(|c| find(&c.name))
        .collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); columns.len()];
    let mut dropped = 0;
    for row in &table.rows {
        let used = std::iter::once(y_idx).chain(col_idx.iter().copied());
        if used.clone().any(|j| opts.is_missing(&row[j])) {
            dropped += 1;
            continue;
        }
        y.push(parse_response(&row[y_idx], response)?);
        for (k, &j) in col_idx.iter().enumerate() {
            raw[k].push(row[j].trim().to_string());
        }
    }
    if y.is_empty() {
        return Err(Error::NoRows);
    }
    if response.family == Family::Logistic {
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if ones == 0 || ones == y.len() {
            return Err(Error::Response {
                column: response.column.clone(),
                reason: "both outcome values 0 and 1 must occur".into(),
            });
        }
    }
    let predictors = columns
        .iter()
        .zip(raw)
        .map(|(c, raw)| {
            if c.kind == ColumnKind::Continuous {
                if let Some(bad) = raw.iter().find(|v| parse_finite(v).is_none()) {
                    return Err(Error::Parse {
                        column: c.name.clone(),
                        value: bad.clone(),
                    });
                }
            }
            Ok(VariableColumn {
                level_order: c.levels.clone(),
                ..VariableColumn::new(c.name.clone(), c.kind, raw)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        response_name: response.column.clone(),
        y,
        predictors,
        dropped_rows: dropped,
    })
}

fn parse_response(s: &str, spec: &ResponseSpec) -> Result<f64> {
    let s = s.trim();
    if let Some(pos) = &spec.positive {
        return Ok(if pos.iter().any(|p| p == s) { 1.0 } else { 0.0 });
    }
    let v = parse_finite(s).ok_or_else(|| Error::Response {
        column: spec.column.clone(),
        reason: format!("cannot parse `{s}` as a number"),
    })?;
    if spec.family == Family::Logistic && v != 0.0 && v != 1.0 {
        return Err(Error::Response {
            column: spec.column.clone(),
            reason: format!("value {s} is not binary; declare `positive` labels"),
        });
    }
    Ok(v)
}

pub(crate) fn parse_finite(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A raw header + rows table of trimmed strings.
#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_table<R: Read>(reader: R, delimiter: u8) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = match rdr.headers() {
        Ok(h) => h.iter().map(str::to_string).collect(),
        Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
        Err(_) => Vec::new(),
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(RawTable { header, rows })
}

pub fn read_table_path(path: &Path, delimiter: u8) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file, delimiter)
}

/// Indicator structure of one predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEncoding {
    /// Category index of every row, in `0..num_categories()`.
    pub g: Vec<usize>,
    /// Display label of every category (merged categories join member labels with `+`).
    pub labels: Vec<String>,
    /// Original labels that make up each category.
    pub members: Vec<Vec<String>>,
    /// Numeric position of every category: the observed value for numeric data, the rank
    /// (1-based) for ordered labels without numeric meaning, and the index + 1 for unordered
    /// columns.
    pub values: Vec<f64>,
    /// Rows per category; the diagonal of `G_kᵀ G_k`.
    pub counts: Vec<usize>,
}

impl CategoryEncoding {
    pub fn num_categories(&self) -> usize {
        self.labels.len()
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// Sum of `x` over the rows of every category, i.e. `G_kᵀ x`.
    pub fn category_sums(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_categories()];
        for (&c, &xi) in self.g.iter().zip(x) {
            out[c] += xi;
        }
        out
    }

    /// `G_k v`: the per-row value of a per-category vector.
    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        self.g.iter().map(|&c| v[c]).collect()
    }

    /// Index of the category holding original label `label`, if any.
    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.members
            .iter()
            .position(|m| m.iter().any(|l| l == label))
            .or_else(|| self.labels.iter().position(|l| l == label))
    }
}

pub fn encode_categories(column: &VariableColumn) -> Result<CategoryEncoding> {
    let labels_in = &column.raw;
    let enc = match column.kind {
        ColumnKind::UnorderedCategorical => encode_first_appearance(labels_in),
        ColumnKind::Binary => {
            if labels_in.iter().all(|l| parse_finite(l).is_some()) {
                encode_numeric(labels_in)
            } else {
                encode_first_appearance(labels_in)
            }
        }
        ColumnKind::Continuous => {
            if let Some(bad) = labels_in.iter().find(|l| parse_finite(l).is_none()) {
                return Err(Error::Parse {
                    column: column.name.clone(),
                    value: bad.clone(),
                });
            }
            encode_numeric(labels_in)
        }
        ColumnKind::OrderedCategorical => encode_ordered(column)?,
    };
    let found = enc.num_categories();
    if found < 2 {
        return Err(Error::TooFewCategories {
            column: column.name.clone(),
            found,
        });
    }
    if column.kind == ColumnKind::Binary && found != 2 {
        return Err(Error::InvalidSpec {
            column: column.name.clone(),
            reason: format!("declared binary but has {found} levels"),
        });
    }
    Ok(enc)
}

fn encode_first_appearance(raw: &[String]) -> CategoryEncoding {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut counts = Vec::new();
    let g = raw
        .iter()
        .map(|l| {
            let c = *index.entry(l.as_str()).or_insert_with(|| {
                labels.push(l.clone());
                counts.push(0);
                labels.len() - 1
            });
            counts[c] += 1;
            c
        })
        .collect();
    let values = (1..=labels.len()).map(|i| i as f64).collect();
    let members = labels.iter().map(|l| vec![l.clone()]).collect();
    CategoryEncoding {
        g,
        labels,
        members,
        values,
        counts,
    }
}

/// Rank encoding by parsed numeric value; labels are the first spelling seen per value.
fn encode_numeric(raw: &[String]) -> CategoryEncoding {
    let parsed: Vec<f64> = raw.iter().map(|l| parse_finite(l).unwrap()).collect();
    let mut distinct: Vec<(f64, &String)> = Vec::new();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| parsed[a].total_cmp(&parsed[b]).then(a.cmp(&b)));
    let mut g = vec![0; raw.len()];
    let mut counts = Vec::new();
    let mut members: Vec<Vec<String>> = Vec::new();
    for i in order {
        match distinct.last() {
            Some(&(v, _)) if v == parsed[i] => {}
            _ => {
                distinct.push((parsed[i], &raw[i]));
                counts.push(0);
                members.push(Vec::new());
            }
        }
        let c = distinct.len() - 1;
        g[i] = c;
        counts[c] += 1;
        if !members[c].contains(&raw[i]) {
            members[c].push(raw[i].clone());
        }
    }
    CategoryEncoding {
        g,
        labels: distinct.iter().map(|(_, l)| (*l).clone()).collect(),
        members,
        values: distinct.iter().map(|(v, _)| *v).collect(),
        counts,
    }
}

/// Leading numeric token of a label such as `"10-14"`, `"20-29+30-39"` or `"<5"`.
fn leading_number(label: &str) -> Option<f64> {
    let s = label.trim_start_matches(|c: char| !(c.is_ascii_digit() || c == '.'));
    let end = s
        .find(|c: char| !(c.is_ascii_digit() || c == '.'))
        .unwrap_or(s.len());
    s[..end].parse().ok()
}

fn encode_ordered(column: &VariableColumn) -> Result<CategoryEncoding> {
    let raw = &column.raw;
    if column.level_order.is_none() && raw.iter().all(|l| parse_finite(l).is_some()) {
        return Ok(encode_numeric(raw));
    }
    let first = encode_first_appearance(raw);
    let key = |label: &str| -> Result<f64> {
        if let Some(order) = &column.level_order {
            return order
                .iter()
                .position(|l| l == label)
                .map(|p| p as f64)
                .ok_or_else(|| Error::InvalidSpec {
                    column: column.name.clone(),
                    reason: format!("level `{label}` missing from the declared level order"),
                });
        }
        leading_number(label).ok_or_else(|| Error::InvalidSpec {
            column: column.name.clone(),
            reason: format!("cannot order level `{label}`; declare `levels` explicitly"),
        })
    };
    let keys = first
        .labels
        .iter()
        .map(|l| key(l))
        .collect::<Result<Vec<_>>>()?;
    let mut perm: Vec<usize> = (0..first.num_categories()).collect();
    perm.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    for w in perm.windows(2) {
        if keys[w[0]] == keys[w[1]] {
            return Err(Error::InvalidSpec {
                column: column.name.clone(),
                reason: format!(
                    "levels `{}` and `{}` have the same position; declare `levels` explicitly",
                    first.labels[w[0]], first.labels[w[1]]
                ),
            });
        }
    }
    let mut new_index = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        new_index[old] = new;
    }
    Ok(CategoryEncoding {
        g: first.g.iter().map(|&c| new_index[c]).collect(),
        labels: perm.iter().map(|&c| first.labels[c].clone()).collect(),
        members: perm.iter().map(|&c| first.members[c].clone()).collect(),
        values: (1..=perm.len()).map(|i| i as f64).collect(),
        counts: perm.iter().map(|&c| first.counts[c]).collect(),
    })
}

/// Merge categories with fewer than `min_count` rows.
///
/// Ordered kinds merge a deficient category into its adjacent neighbour with the smaller
/// count (ties merge leftward); unordered kinds merge into the modal category. Repeats until
/// every category has at least `min_count` rows.
pub fn merge_rare_categories(
    enc: &CategoryEncoding,
    min_count: usize,
    kind: ColumnKind,
) -> Result<CategoryEncoding> {
    if min_count >= enc.n() {
        return Err(Error::InvalidSpec {
            column: String::new(),
            reason: format!("merge min_count {min_count} must be below n = {}", enc.n()),
        });
    }
    let mut groups: Vec<Vec<usize>> = (0..enc.num_categories()).map(|c| vec![c]).collect();
    let mut counts: Vec<usize> = enc.counts.clone();
    while let Some(victim) = (0..counts.len())
        .filter(|&c| counts[c] < min_count)
        .min_by_key(|&c| (counts[c], c))
    {
        if counts.len() <= 2 {
            return Err(Error::TooFewCategories {
                column: String::new(),
                found: 1,
            });
        }
        let target = if kind.is_unordered() {
            (0..counts.len())
                .filter(|&c| c != victim)
                .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                .unwrap()
        } else if victim == 0 {
            1
        } else if victim + 1 == counts.len() || counts[victim - 1] <= counts[victim + 1] {
            victim - 1
        } else {
            victim + 1
        };
        let moved = std::mem::take(&mut groups[victim]);
        groups[target].extend(moved);
        counts[target] += counts[victim];
        groups.remove(victim);
        counts.remove(victim);
    }
    if groups.len() == enc.num_categories() {
        return Ok(enc.clone());
    }
    for grp in groups.iter_mut() {
        grp.sort_unstable();
    }
    if kind.is_unordered() {
        // Keep first-appearance order of each group's earliest member.
        groups.sort_by_key(|g| g[0]);
    }
    let mut new_index = vec![0; enc.num_categories()];
    for (new, grp) in groups.iter().enumerate() {
        for &old in grp {
            new_index[old] = new;
        }
    }
    let members: Vec<Vec<String>> = groups
        .iter()
        .map(|grp| grp.iter().flat_map(|&c| enc.members[c].clone()).collect())
        .collect();
    let counts: Vec<usize> = groups
        .iter()
        .map(|grp| grp.iter().map(|&c| enc.counts[c]).sum())
        .collect();
    let values = if kind.is_unordered() {
        (1..=groups.len()).map(|i| i as f64).collect()
    } else {
        groups
            .iter()
            .map(|grp| {
                let w: f64 = grp.iter().map(|&c| enc.counts[c] as f64).sum();
                grp.iter()
                    .map(|&c| enc.counts[c] as f64 * enc.values[c])
                    .sum::<f64>()
                    / w
            })
            .collect()
    };
    Ok(CategoryEncoding {
        g: enc.g.iter().map(|&c| new_index[c]).collect(),
        labels: groups
            .iter()
            .map(|grp| {
                grp.iter()
                    .map(|&c| enc.labels[c].as_str())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect(),
        members,
        values,
        counts,
    })
}

/// A scaling spec that passed [`validate_spec`], possibly downgraded.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedSpec {
    pub spec: ScalingSpec,
    pub note: Option<String>,
}

pub fn validate_spec(
    spec: ScalingSpec,
    enc: &CategoryEncoding,
    kind: ColumnKind,
) -> std::result::Result<CheckedSpec, String> {
    let c = enc.num_categories();
    if c == 2 && spec.level != ScalingLevel::Numeric {
        return Ok(CheckedSpec {
            spec: ScalingSpec {
                level: ScalingLevel::Numeric,
                ..spec
            },
            note: Some(format!(
                "two categories: level {} downgraded to numeric (identical quantifications)",
                spec.level.as_str()
            )),
        });
    }
    if kind.is_unordered() {
        if spec.level.is_monotone() {
            return Err(format!(
                "level {} requires ordered data",
                spec.level.as_str()
            ));
        }
        if spec.level == ScalingLevel::Numeric || spec.level.is_spline() {
            return Err(format!(
                "level {} needs meaningful category values; use nominal-step",
                spec.level.as_str()
            ));
        }
    }
    if spec.level.is_spline() {
        if spec.degree < 1 {
            return Err("spline degree must be at least 1".into());
        }
        let needed = spec.degree + spec.interior_knots + 1;
        if c < needed {
            return Err(format!(
                "spline of degree {} with {} interior knot(s) needs at least {needed} distinct values, found {c}",
                spec.degree, spec.interior_knots
            ));
        }
    }
    Ok(CheckedSpec { spec, note: None })
}
