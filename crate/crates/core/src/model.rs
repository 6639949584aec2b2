//! Uniform front end over the five estimators: kinds, hyperparameter maps,
//! a tagged fitted-model enum and its versioned JSON document.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cart::{RegressionTree, SampleCount, TreeParams};
use crate::cheby::ChebyBasisConfig;
use crate::chebypoly::ChebyPolyModel;
use crate::chebytree::{ChebyTreeModel, ChebyTreeParams};
use crate::data::{Dataset, MedianImputer};
use crate::erbf::{CenterInit, ErbfConfig, ErbfModel, NRbf, WidthInit};
use crate::error::{Error, Result};
use crate::ridge_model::RidgeModel;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ridge,
    Dt,
    #[serde(rename = "chebypoly")]
    ChebyPoly,
    #[serde(rename = "chebytree")]
    ChebyTree,
    Erbf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::Ridge, ModelKind::Dt, ModelKind::ChebyPoly, ModelKind::ChebyTree, ModelKind::Erbf];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ridge => "ridge",
            ModelKind::Dt => "dt",
            ModelKind::ChebyPoly => "chebypoly",
            ModelKind::ChebyTree => "chebytree",
            ModelKind::Erbf => "erbf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown model '{s}' (expected one of ridge, dt, chebypoly, chebytree, erbf)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl ParamValue {
    /// Parses a command-line value: bool, then integer, then float, else string.
    pub fn parse(s: &str) -> Self {
        if let Ok(b) = s.parse() {
            ParamValue::Bool(b)
        } else if let Ok(i) = s.parse() {
            ParamValue::Int(i)
        } else if let Ok(f) = s.parse() {
            ParamValue::Float(f)
        } else {
            ParamValue::Str(s.to_string())
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Bool(b) => write!(f, "{b}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Str(s) => f.write_str(s),
        }
    }
}

pub type TrialParams = BTreeMap<String, ParamValue>;

/// Reads typed values out of a [`TrialParams`] and rejects leftovers.
struct ParamReader<'a> {
    params: &'a TrialParams,
    used: Vec<&'static str>,
}

impl<'a> ParamReader<'a> {
    fn new(params: &'a TrialParams) -> Self {
        Self { params, used: Vec::new() }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a ParamValue> {
        self.used.push(key);
        self.params.get(key)
    }

    fn float(&mut self, key: &'static str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(v)) => Ok(*v),
            Some(ParamValue::Int(i)) => Ok(*i as f64),
            Some(other) => Err(bad(key, other)),
        }
    }

    fn uint(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(*i as usize),
            Some(other) => Err(bad(key, other)),
        }
    }

    fn flag(&mut self, key: &'static str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Bool(b)) => Ok(*b),
            Some(other) => Err(bad(key, other)),
        }
    }

    fn text(&mut self, key: &'static str) -> Option<&'a ParamValue> {
        self.get(key)
    }

    /// Integers are counts; floats are fractions of the training set.
    fn sample_count(&mut self, key: &'static str, default: SampleCount) -> Result<SampleCount> {
        match self.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 1 => Ok(SampleCount::Count(*i as usize)),
            Some(ParamValue::Float(f)) => Ok(SampleCount::Fraction(*f)),
            Some(other) => Err(bad(key, other)),
        }
    }

    fn finish(self, kind: ModelKind) -> Result<()> {
        match self.params.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidInput(format!("unknown hyperparameter '{k}' for {kind}"))),
            None => Ok(()),
        }
    }
}

fn bad(key: &str, value: &ParamValue) -> Error {
    Error::InvalidInput(format!("invalid value '{value}' for hyperparameter '{key}'"))
}

fn choice<T>(key: &'static str, value: Option<&ParamValue>, default: T, options: &[(&str, T)]) -> Result<T>
where
    T: Copy,
{
    match value {
        None => Ok(default),
        Some(ParamValue::Str(s)) => options
            .iter()
            .find(|(name, _)| name == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| bad(key, &ParamValue::Str(s.clone()))),
        Some(other) => Err(bad(key, other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Ridge(RidgeModel),
    Dt(RegressionTree),
    #[serde(rename = "chebypoly")]
    ChebyPoly(ChebyPolyModel),
    #[serde(rename = "chebytree")]
    ChebyTree(ChebyTreeModel),
    Erbf(ErbfModel),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Ridge(_) => ModelKind::Ridge,
            FittedModel::Dt(_) => ModelKind::Dt,
            FittedModel::ChebyPoly(_) => ModelKind::ChebyPoly,
            FittedModel::ChebyTree(_) => ModelKind::ChebyTree,
            FittedModel::Erbf(_) => ModelKind::Erbf,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        match self {
            FittedModel::Ridge(m) => m.predict(x),
            FittedModel::Dt(m) => m.predict(x),
            FittedModel::ChebyPoly(m) => m.predict(x),
            FittedModel::ChebyTree(m) => m.predict(x),
            FittedModel::Erbf(m) => m.predict(x),
        }
    }
}

/// Fits `kind` with the given hyperparameters. Missing keys take defaults;
/// unknown keys are rejected. `seed` drives the erbf centre sampling.
pub fn fit_model(kind: ModelKind, train: &Dataset, params: &TrialParams, seed: u64) -> Result<FittedModel> {
    let (x, y) = (train.features(), train.target());
    let mut p = ParamReader::new(params);
    let model = match kind {
        ModelKind::Ridge => {
            let alpha = p.float("alpha", 1.0)?;
            p.finish(kind)?;
            FittedModel::Ridge(RidgeModel::fit_xy(x, y, alpha)?)
        }
        ModelKind::Dt => {
            let tp = TreeParams::new(
                p.uint("max_depth", 20)?,
                p.sample_count("min_samples_leaf", SampleCount::Count(1))?,
                p.sample_count("min_samples_split", SampleCount::Count(2))?,
            );
            p.finish(kind)?;
            FittedModel::Dt(RegressionTree::fit_xy(x, y, tp)?)
        }
        ModelKind::ChebyPoly => {
            let complexity = p.uint("complexity", 3)?;
            let alpha = p.float("alpha", 1.0)?;
            let interactions = p.flag("include_interactions", false)?;
            let mic = p.uint("max_interaction_complexity", 1)?;
            p.finish(kind)?;
            let basis = if interactions {
                ChebyBasisConfig::with_interactions(complexity, u8::try_from(mic).unwrap_or(u8::MAX))
            } else {
                ChebyBasisConfig::univariate(complexity)
            };
            FittedModel::ChebyPoly(ChebyPolyModel::fit_xy(x, y, basis, alpha)?)
        }
        ModelKind::ChebyTree => {
            let tp = ChebyTreeParams {
                complexity: p.uint("complexity", 2)?,
                max_depth: p.uint("max_depth", 4)?,
                min_samples_leaf: p.sample_count("min_samples_leaf", SampleCount::Fraction(0.05))?,
                alpha: p.float("alpha", 1.0)?,
            };
            p.finish(kind)?;
            FittedModel::ChebyTree(ChebyTreeModel::fit_xy(x, y, tp)?)
        }
        ModelKind::Erbf => {
            let n_rbf = match p.text("n_rbf") {
                None => NRbf::Auto,
                Some(ParamValue::Str(s)) if s == "auto" => NRbf::Auto,
                Some(ParamValue::Int(k)) if *k >= 1 => NRbf::Fixed(*k as usize),
                Some(other) => return Err(bad("n_rbf", other)),
            };
            let defaults = ErbfConfig::default();
            let cfg = ErbfConfig {
                n_rbf,
                alpha: p.float("alpha", defaults.alpha)?,
                center_init: choice(
                    "center_init",
                    p.text("center_init"),
                    defaults.center_init,
                    &[("lipschitz", CenterInit::Lipschitz), ("kmeans", CenterInit::Kmeans)],
                )?,
                width_init: choice(
                    "width_init",
                    p.text("width_init"),
                    defaults.width_init,
                    &[("local_ridge", WidthInit::LocalRidge), ("local_variance", WidthInit::LocalVariance)],
                )?,
                width_optim_iters: p.uint("width_optim_iters", defaults.width_optim_iters)?,
                seed,
                ..defaults
            };
            p.finish(kind)?;
            FittedModel::Erbf(ErbfModel::fit_xy(x, y, cfg)?)
        }
    };
    Ok(model)
}

/// On-disk form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub target: String,
    pub params: TrialParams,
    /// Medians for filling missing inputs, when training data had gaps.
    #[serde(default)]
    pub imputer: Option<MedianImputer>,
    pub model: FittedModel,
}

impl ModelDocument {
    pub fn new(model: FittedModel, feature_names: Vec<String>, target: impl Into<String>, params: TrialParams) -> Self {
        Self { format_version: MODEL_FORMAT_VERSION, feature_names, target: target.into(), params, imputer: None, model }
    }

    pub fn with_imputer(mut self, imputer: MedianImputer) -> Self {
        self.imputer = Some(imputer);
        self
    }

    /// Imputes (if configured) and predicts.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        match &self.imputer {
            Some(imp) => self.model.predict(&imp.apply(x)?),
            None => self.model.predict(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }
}
