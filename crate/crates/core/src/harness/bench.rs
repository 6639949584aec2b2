//! Benchmark configuration and the dataset × model driver.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cv::{nested_cv_run, CvConfig};
use super::report::{build_report, write_results, BenchmarkReport, PairFailure, RunRecord};
use super::search::SearchSpace;
use crate::data::{drop_quasi_constant, load_csv, subsample, Dataset};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::synth::{gen, SynthKind, SynthSpec};

/// One `[[datasets]]` entry: either `synth` (+ `n`, optional `seed`,
/// `noise_std`) or `path` + `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: Option<String>,
    pub synth: Option<SynthKind>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub noise_std: Option<f64>,
    pub path: Option<PathBuf>,
    pub target: Option<String>,
}

impl DatasetEntry {
    pub fn synth(kind: SynthKind, n: usize, seed: u64) -> Self {
        Self { name: None, synth: Some(kind), n: Some(n), seed: Some(seed), noise_std: None, path: None, target: None }
    }

    pub fn csv(path: impl Into<PathBuf>, target: impl Into<String>) -> Self {
        Self { name: None, synth: None, n: None, seed: None, noise_std: None, path: Some(path.into()), target: Some(target.into()) }
    }

    pub fn id(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match (&self.synth, &self.path) {
            (Some(kind), _) => kind.to_string(),
            (None, Some(p)) => p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()),
            (None, None) => "unnamed".into(),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match (self.synth, &self.path) {
            (Some(kind), None) => {
                let n = self.n.ok_or_else(|| Error::Config(format!("dataset '{}': synthetic entries need n", self.id())))?;
                let mut spec = SynthSpec::new(kind, n, self.seed.unwrap_or(0));
                spec.noise_std = self.noise_std;
                gen(&spec)
            }
            (None, Some(path)) => {
                let target = self
                    .target
                    .as_deref()
                    .ok_or_else(|| Error::Config(format!("dataset '{}': csv entries need target", self.id())))?;
                load_csv(path, target)
            }
            _ => Err(Error::Config(format!("dataset '{}': give exactly one of synth or path", self.id()))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub results: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

fn default_threshold() -> f64 {
    0.95
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetEntry>,
    pub models: Vec<ModelKind>,
    #[serde(flatten)]
    pub cv: CvConfig,
    pub max_samples: Option<usize>,
    #[serde(default = "default_threshold")]
    pub quasi_constant_threshold: f64,
    #[serde(default)]
    pub output: OutputPaths,
}

impl BenchConfig {
    pub fn new(datasets: Vec<DatasetEntry>, models: Vec<ModelKind>) -> Self {
        Self {
            datasets,
            models,
            cv: CvConfig::default(),
            max_samples: None,
            quasi_constant_threshold: default_threshold(),
            output: OutputPaths::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.datasets.iter_mut().filter_map(|d| d.path.as_mut()).for_each(rebase);
        cfg.output.results.iter_mut().for_each(rebase);
        cfg.output.report_dir.iter_mut().for_each(rebase);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.models.is_empty() {
            return Err(Error::Config("config needs at least one dataset and one model".into()));
        }
        let mut ids: Vec<String> = self.datasets.iter().map(DatasetEntry::id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate dataset name '{}'; set distinct `name`s", w[0])));
        }
        if self.cv.outer_k < 2 {
            return Err(Error::Config("outer_k must be >= 2".into()));
        }
        Ok(())
    }
}

pub struct BenchOutcome {
    pub records: Vec<RunRecord>,
    pub report: BenchmarkReport,
}

impl BenchOutcome {
    pub fn failed_pairs(&self) -> Vec<&PairFailure> {
        self.records
            .iter()
            .filter_map(|r| match r {
                RunRecord::Failure(f) => Some(f),
                _ => None,
            })
            .collect()
    }

    /// Writes whichever outputs the config names.
    pub fn write(&self, output: &OutputPaths) -> Result<()> {
        if let Some(path) = &output.results {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
            }
            let file = std::fs::File::create(path).map_err(|source| Error::Io { path: path.clone(), source })?;
            write_results(&self.records, std::io::BufWriter::new(file))?;
        }
        if let Some(dir) = &output.report_dir {
            self.report.write_to_dir(dir)?;
        }
        Ok(())
    }
}

fn prepare(entry: &DatasetEntry, cfg: &BenchConfig) -> Result<Dataset> {
    let mut ds = entry.load()?;
    if let Some(max) = cfg.max_samples {
        ds = subsample(&ds, max, cfg.cv.outer_seed)?;
    }
    drop_quasi_constant(&ds, cfg.quasi_constant_threshold)
}

/// Runs every (dataset, model) pair in config order. A failing pair is
/// recorded and the run continues; `progress` receives one line per pair.
pub fn run_bench(cfg: &BenchConfig, progress: &mut dyn FnMut(&str)) -> Result<BenchOutcome> {
    cfg.validate()?;
    let mut records = Vec::new();
    for entry in &cfg.datasets {
        let id = entry.id();
        let ds = prepare(entry, cfg);
        for &kind in &cfg.models {
            let outcome = match &ds {
                Ok(ds) => nested_cv_run(ds, &id, kind, &SearchSpace::for_model(kind), &cfg.cv).map_err(|e| e.to_string()),
                Err(e) => Err(format!("dataset unavailable: {e}")),
            };
            match outcome {
                Ok(folds) => {
                    let mean = folds.iter().map(|f| f.test_r2_adj).sum::<f64>() / folds.len() as f64;
                    progress(&format!("{id} / {kind}: mean adjusted R² {mean:.4}"));
                    records.extend(folds.into_iter().map(RunRecord::Fold));
                }
                Err(e) => {
                    progress(&format!("{id} / {kind}: FAILED: {e}"));
                    records.push(RunRecord::Failure(PairFailure { dataset: id.clone(), model: kind, message: e }));
                }
            }
        }
    }
    let report = build_report(&records, Some(&cfg.models))?;
    Ok(BenchOutcome { records, report })
}
