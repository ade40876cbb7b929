//! TOML run configuration.
//!
//! ```toml
//! [data]
//! path = "../data/cmc.csv"          # relative to the config file
//! response = "contraceptive_method"
//! positive = ["2", "3"]             # labels coded as y = 1
//! merge_min_count = 1
//!
//! [fit]
//! tol = 1e-8
//!
//! [cv]
//! folds = 10
//! seed = 1
//!
//! [[columns]]
//! name = "wife_age"
//! kind = "continuous"
//! level = "spline-nonmonotone"
//! degree = 2
//! interior_knots = 1
//!
//! [[variants]]
//! name = "GLM-OS (monotone)"
//! method = "glm-os"
//! levels = { wife_age = { level = "spline-monotone", degree = 2, interior_knots = 1 } }
//! ```
//!
//! Columns are fitted in file order. A variant overrides the level of any column, either with
//! a bare level name or with a full spec table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    load_dataset, ColumnKind, ColumnSchema, Dataset, Family, ReadOptions, ResponseSpec,
    ScalingLevel, ScalingSpec,
};
use crate::error::{Error, Result};
use crate::eval::Metric;
use crate::glm::FitOptions;
use crate::model::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub cv: CvConfig,
    pub columns: Vec<ColumnConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<VariantConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<Vec<String>>,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    #[serde(default = "default_merge")]
    pub merge_min_count: usize,
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_missing() -> Vec<String> {
    ReadOptions::default().missing
}

fn default_merge() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default)]
    pub family: Family,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
    #[serde(default = "default_halving")]
    pub step_halving_max: usize,
}

fn default_tol() -> f64 {
    FitOptions::default().tol
}

fn default_max_cycles() -> usize {
    FitOptions::default().max_cycles
}

fn default_halving() -> usize {
    FitOptions::default().step_halving_max
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            family: Family::default(),
            tol: default_tol(),
            max_cycles: default_max_cycles(),
            step_halving_max: default_halving(),
        }
    }
}

impl FitConfig {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            max_cycles: self.max_cycles,
            tol: self.tol,
            step_halving_max: self.step_halving_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub stratified: bool,
    #[serde(default)]
    pub metric: Metric,
}

fn default_folds() -> usize {
    10
}

fn default_seed() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: default_folds(),
            seed: default_seed(),
            stratified: true,
            metric: Metric::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnConfig {
    pub name: String,
    pub kind: ColumnKind,
    pub level: ScalingLevel,
    #[serde(default = "default_degree")]
    pub degree: usize,
    #[serde(default)]
    pub interior_knots: usize,
    /// Level order for ordered categorical columns whose labels do not sort by value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

fn default_degree() -> usize {
    2
}

impl ColumnConfig {
    pub fn spec(&self) -> ScalingSpec {
        ScalingSpec::spline(self.level, self.degree, self.interior_knots)
    }
}

/// Override of a column's scaling level inside a variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelOverride {
    Level(ScalingLevel),
    Spec(ScalingSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub levels: BTreeMap<String, LevelOverride>,
}

fn default_method() -> Method {
    Method::GlmOs
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    fn check(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Config("no [[columns]] declared".into()));
        }
        for (i, c) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Config(format!("column `{}` declared twice", c.name)));
            }
        }
        for v in &self.variants {
            for name in v.levels.keys() {
                if !self.columns.iter().any(|c| &c.name == name) {
                    return Err(Error::UnknownColumn(name.clone()));
                }
            }
        }
        if self.fit.tol.is_nan() || self.fit.tol < 0.0 {
            return Err(Error::Config("fit.tol must be nonnegative".into()));
        }
        self.read_options()?;
        Ok(())
    }

    pub fn read_options(&self) -> Result<ReadOptions> {
        let delimiter = match self.data.delimiter.as_str() {
            "tab" | "\\t" | "\t" => b'\t',
            d if d.len() == 1 => d.as_bytes()[0],
            d => return Err(Error::Config(format!("delimiter `{d}` must be a single byte"))),
        };
        Ok(ReadOptions {
            delimiter,
            missing: self.data.missing.clone(),
        })
    }

    pub fn schemas(&self) -> Vec<ColumnSchema> {
        self.columns
            .iter()
            .map(|c| ColumnSchema {
                name: c.name.clone(),
                kind: c.kind,
                levels: c.levels.clone(),
            })
            .collect()
    }

    pub fn response_spec(&self) -> ResponseSpec {
        ResponseSpec {
            column: self.data.response.clone(),
            positive: self.data.positive.clone(),
            family: self.fit.family,
        }
    }

    /// The data file, resolved against `base` (the config file's directory) when relative.
    pub fn data_path(&self, base: &Path) -> PathBuf {
        if self.data.path.is_absolute() {
            self.data.path.clone()
        } else {
            base.join(&self.data.path)
        }
    }

    /// Load the data and apply the configured rare-category merge.
    pub fn load_data(&self, base: &Path) -> Result<(Dataset, Vec<String>)> {
        let ds = load_dataset(
            &self.data_path(base),
            &self.schemas(),
            &self.response_spec(),
            &self.read_options()?,
        )?;
        ds.merge_rare(self.data.merge_min_count)
    }

    /// Base scaling specs, aligned with `columns`.
    pub fn base_specs(&self) -> Vec<ScalingSpec> {
        self.columns.iter().map(ColumnConfig::spec).collect()
    }

    /// Scaling specs for `variant`, aligned with `columns`.
    pub fn variant_specs(&self, variant: &VariantConfig) -> Vec<ScalingSpec> {
        self.columns
            .iter()
            .map(|c| match variant.levels.get(&c.name) {
                None => c.spec(),
                Some(LevelOverride::Level(level)) => ScalingSpec {
                    level: *level,
                    ..c.spec()
                },
                Some(LevelOverride::Spec(spec)) => *spec,
            })
            .collect()
    }

    /// The configured variants, or a single GLM-OS variant with the base levels.
    pub fn variants_or_default(&self) -> Vec<VariantConfig> {
        if self.variants.is_empty() {
            vec![VariantConfig {
                name: "GLM-OS".into(),
                method: match self.fit.family {
                    Family::Logistic => Method::GlmOs,
                    Family::LinearOs => Method::LinearOs,
                },
                levels: BTreeMap::new(),
            }]
        } else {
            self.variants.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[data]
path = "d.csv"
response = "y"
positive = ["yes"]
merge_min_count = 2

[cv]
folds = 5
seed = 7

[[columns]]
name = "age"
kind = "continuous"
level = "spline-monotone"
interior_knots = 1

[[columns]]
name = "colour"
kind = "unordered-categorical"
level = "nominal-step"

[[variants]]
name = "linear"
method = "dummy-logistic"
levels = { age = "numeric" }

[[variants]]
name = "wiggly"
levels = { age = { level = "spline-nonmonotone", degree = 3, interior_knots = 2 } }
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.columns.len(), 2);
        assert_eq!(cfg.columns[0].degree, 2);
        assert_eq!(cfg.cv.folds, 5);
        assert!(cfg.cv.stratified);
        assert_eq!(cfg.fit.tol, 1e-8);
        let specs = cfg.variant_specs(&cfg.variants[0]);
        assert_eq!(specs[0].level, ScalingLevel::Numeric);
        let specs = cfg.variant_specs(&cfg.variants[1]);
        assert_eq!(specs[0], ScalingSpec::spline(ScalingLevel::SplineNonmonotone, 3, 2));
        let again = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_override_column_is_rejected() {
        let bad = SAMPLE.replace("levels = { age = \"numeric\" }", "levels = { agee = \"numeric\" }");
        let err = RunConfig::from_toml_str(&bad).unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(ref c) if c == "agee"));
        assert!(err.is_config_error());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SAMPLE.replace("seed = 7", "seed = 7\nshuffle = true");
        assert!(matches!(RunConfig::from_toml_str(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn tab_delimiter() {
        let cfg = RunConfig::from_toml_str(&SAMPLE.replace("merge_min_count = 2", "delimiter = \"tab\"")).unwrap();
        assert_eq!(cfg.read_options().unwrap().delimiter, b'\t');
    }
}
