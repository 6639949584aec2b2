//! Result records, aggregation into a benchmark report, and file formats.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::cv::FoldResult;
use super::gapwins::{matched_accuracy_gap_wins, GapCell, GapWinTable, DEFAULT_GAP_PAIRS, DEFAULT_GAP_THRESHOLD};
use super::stats::{friedman_test, nemenyi_cd, rank_models, FriedmanResult, RankTable};
use crate::data::median;
use crate::error::{Error, Result};
use crate::model::ModelKind;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Wall-clock fields, in fold records and report cells alike.
pub const TIMING_FIELDS: [&str; 3] = ["tune_seconds", "train_seconds", "predict_ms_per_1k"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub dataset: String,
    pub model: ModelKind,
    pub message: String,
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum RunRecord {
    Fold(FoldResult),
    Failure(PairFailure),
}

impl RunRecord {
    pub fn dataset(&self) -> &str {
        match self {
            RunRecord::Fold(f) => &f.dataset,
            RunRecord::Failure(f) => &f.dataset,
        }
    }

    pub fn model(&self) -> ModelKind {
        match self {
            RunRecord::Fold(f) => f.model,
            RunRecord::Failure(f) => f.model,
        }
    }
}

pub fn write_results<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    for r in records {
        let mut v = serde_json::to_value(r)?;
        v.as_object_mut()
            .expect("records serialise to objects")
            .insert("schema_version".into(), RESULTS_SCHEMA_VERSION.into());
        writeln!(w, "{}", serde_json::to_string(&v)?).map_err(io_err("results"))?;
    }
    w.flush().map_err(io_err("results"))
}

pub fn read_results<R: BufRead>(r: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(io_err("results"))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut v: Value = serde_json::from_str(&line)?;
        let version = v.as_object_mut().and_then(|o| o.remove("schema_version"));
        if version != Some(RESULTS_SCHEMA_VERSION.into()) {
            return Err(Error::InvalidInput(format!("results line {}: unsupported or missing schema_version", i + 1)));
        }
        out.push(serde_json::from_value(v)?);
    }
    Ok(out)
}

fn io_err(what: &'static str) -> impl Fn(std::io::Error) -> Error {
    move |source| Error::Io { path: what.into(), source }
}

/// Removes wall-clock fields at any depth.
pub fn mask_timings(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for f in TIMING_FIELDS {
                map.remove(f);
            }
            map.values_mut().for_each(mask_timings);
        }
        Value::Array(items) => items.iter_mut().for_each(mask_timings),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n_folds: usize,
    pub mean_test_r2_adj: f64,
    pub median_test_r2_adj: f64,
    pub std_test_r2_adj: f64,
    pub mean_test_r2: f64,
    pub mean_train_r2: f64,
    pub mean_gap: f64,
    pub median_gap: f64,
    /// Fold means of the timing fields.
    pub tune_seconds: f64,
    pub train_seconds: f64,
    pub predict_ms_per_1k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub dataset: String,
    pub model: ModelKind,
    /// `None` when the pair failed or has no results.
    pub stats: Option<CellStats>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub datasets: Vec<String>,
    pub models: Vec<ModelKind>,
    pub cells: Vec<CellSummary>,
    pub ranks: Option<RankTable>,
    pub friedman: Option<FriedmanResult>,
    pub nemenyi_cd: Option<f64>,
    pub gap_wins: Option<GapWinTable>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn cell_stats(folds: &[&FoldResult]) -> CellStats {
    let col = |f: fn(&FoldResult) -> f64| folds.iter().map(|r| f(r)).collect::<Vec<f64>>();
    let adj = col(|r| r.test_r2_adj);
    let gaps = col(|r| r.gap);
    CellStats {
        n_folds: folds.len(),
        mean_test_r2_adj: mean(&adj),
        median_test_r2_adj: median(&adj).unwrap_or(f64::NAN),
        std_test_r2_adj: sample_std(&adj),
        mean_test_r2: mean(&col(|r| r.test_r2)),
        mean_train_r2: mean(&col(|r| r.train_r2)),
        mean_gap: mean(&gaps),
        median_gap: median(&gaps).unwrap_or(f64::NAN),
        tune_seconds: mean(&col(|r| r.tune_seconds)),
        train_seconds: mean(&col(|r| r.train_seconds)),
        predict_ms_per_1k: mean(&col(|r| r.predict_ms_per_1k)),
    }
}

fn push_unique<T: PartialEq>(v: &mut Vec<T>, x: T) {
    if !v.contains(&x) {
        v.push(x);
    }
}

/// Aggregates raw records. Datasets and models keep their first-appearance
/// order unless `models` restricts and orders them. Pairs with no fold
/// results count as failed and take the worst rank.
pub fn build_report(records: &[RunRecord], models: Option<&[ModelKind]>) -> Result<BenchmarkReport> {
    let records: Vec<&RunRecord> = records.iter().filter(|r| models.is_none_or(|m| m.contains(&r.model()))).collect();
    if records.is_empty() {
        return Err(Error::InvalidInput("no results to report".into()));
    }
    let mut datasets = Vec::new();
    let mut model_order = Vec::new();
    for r in &records {
        push_unique(&mut datasets, r.dataset().to_string());
        push_unique(&mut model_order, r.model());
    }
    if let Some(m) = models {
        model_order = m.iter().copied().filter(|k| model_order.contains(k)).collect();
    }

    let mut cells = Vec::new();
    for ds in &datasets {
        for &m in &model_order {
            let pair: Vec<&&RunRecord> = records.iter().filter(|r| r.dataset() == ds && r.model() == m).collect();
            let failure = pair.iter().find_map(|r| match r {
                RunRecord::Failure(f) => Some(f.message.clone()),
                _ => None,
            });
            let folds: Vec<&FoldResult> = pair
                .iter()
                .filter_map(|r| match r {
                    RunRecord::Fold(f) => Some(f),
                    _ => None,
                })
                .collect();
            let (stats, error) = match (failure, folds.is_empty()) {
                (Some(msg), _) => (None, Some(msg)),
                (None, true) => (None, Some("no results".into())),
                (None, false) => (Some(cell_stats(&folds)), None),
            };
            cells.push(CellSummary { dataset: ds.clone(), model: m, stats, error });
        }
    }

    let k = model_order.len();
    let (ranks, friedman, nemenyi) = if k >= 2 {
        let scores: Vec<Vec<Option<f64>>> = cells
            .chunks(k)
            .map(|row| row.iter().map(|c| c.stats.as_ref().map(|s| s.mean_test_r2_adj)).collect())
            .collect();
        let table = rank_models(&scores)?;
        let friedman = friedman_test(&table.ranks).ok();
        let cd = nemenyi_cd(k, datasets.len(), 0.05).ok();
        (Some(table), friedman, cd)
    } else {
        (None, None, None)
    };

    let gap_wins = (k >= 2 && datasets.len() >= 3).then(|| {
        let gap_cells: Vec<GapCell> = cells
            .iter()
            .filter_map(|c| {
                c.stats.as_ref().map(|s| GapCell {
                    dataset: c.dataset.clone(),
                    model: c.model,
                    mean_r2_adj: s.mean_test_r2_adj,
                    mean_gap: s.mean_gap,
                })
            })
            .collect();
        let pairs: Vec<_> = DEFAULT_GAP_PAIRS
            .into_iter()
            .filter(|(a, b)| model_order.contains(a) && model_order.contains(b))
            .collect();
        matched_accuracy_gap_wins(&gap_cells, &pairs, DEFAULT_GAP_THRESHOLD)
    });

    Ok(BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        datasets,
        models: model_order,
        cells,
        ranks,
        friedman,
        nemenyi_cd: nemenyi,
        gap_wins,
    })
}

impl BenchmarkReport {
    pub fn cell(&self, dataset: &str, model: ModelKind) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.dataset == dataset && c.model == model)
    }

    pub fn mean_r2_adj(&self, dataset: &str, model: ModelKind) -> Option<f64> {
        self.cell(dataset, model)?.stats.as_ref().map(|s| s.mean_test_r2_adj)
    }

    /// Column order for the CSV tables: by mean rank, ties keep report order.
    pub fn models_by_rank(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.models.len()).collect();
        if let Some(r) = &self.ranks {
            idx.sort_by(|&a, &b| r.mean_ranks[a].total_cmp(&r.mean_ranks[b]));
        }
        idx
    }

    fn write_table<W: Write>(&self, w: W, value: impl Fn(usize, usize) -> Option<f64>) -> Result<()> {
        let order = self.models_by_rank();
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<String> = std::iter::once("dataset".to_string()).chain(order.iter().map(|&j| self.models[j].to_string())).collect();
        out.write_record(&header)?;
        for (i, ds) in self.datasets.iter().enumerate() {
            let mut row = vec![ds.clone()];
            row.extend(order.iter().map(|&j| value(i, j).map(|v| v.to_string()).unwrap_or_default()));
            out.write_record(&row)?;
        }
        out.flush().map_err(io_err("csv"))
    }

    /// Per-dataset ranks; empty when fewer than two models.
    pub fn write_rank_csv<W: Write>(&self, w: W) -> Result<()> {
        self.write_table(w, |i, j| self.ranks.as_ref().map(|r| r.ranks[i][j]))
    }

    /// Per-dataset mean adjusted R²; failed cells are empty.
    pub fn write_r2_csv<W: Write>(&self, w: W) -> Result<()> {
        let k = self.models.len();
        self.write_table(w, |i, j| self.cells[i * k + j].stats.as_ref().map(|s| s.mean_test_r2_adj))
    }

    /// Writes `report.json`, `ranks.csv` and `r2.csv` into `dir`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let io = |p: &Path| {
            let p = p.to_path_buf();
            move |source| Error::Io { path: p.clone(), source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let json = dir.join("report.json");
        std::fs::write(&json, serde_json::to_string_pretty(self)?).map_err(io(&json))?;
        let ranks = dir.join("ranks.csv");
        self.write_rank_csv(std::fs::File::create(&ranks).map_err(io(&ranks))?)?;
        let r2 = dir.join("r2.csv");
        self.write_r2_csv(std::fs::File::create(&r2).map_err(io(&r2))?)?;
        Ok(())
    }
}
