//! Nested cross-validation: seeded outer folds, inner-CV hyperparameter
//! search, refit on the outer training split, clipped held-out evaluation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{adjusted_r2, clip_predictions, r2};
use super::search::{search_with, RandomSearch, SearchOutcome, SearchSpace, SearchStrategy};
use crate::data::{inner_fold_count, kfold_split, Dataset, MedianImputer};
use crate::error::{Error, Result};
use crate::model::{fit_model, ModelKind, TrialParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub outer_k: usize,
    pub outer_seed: u64,
    pub search_seed: u64,
    /// Seed handed to stochastic estimators (erbf centre sampling).
    pub model_seed: u64,
    /// Worker threads for outer folds.
    pub parallel_folds: usize,
    /// Overrides the space's trial budget when set.
    pub budget: Option<usize>,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { outer_k: 5, outer_seed: 42, search_seed: 0, model_seed: 42, parallel_folds: 1, budget: None }
    }
}

impl CvConfig {
    fn inner_seed(&self, fold: usize) -> u64 {
        self.outer_seed.wrapping_add(1 + fold as u64)
    }

    fn fold_search_seed(&self, fold: usize) -> u64 {
        self.search_seed.wrapping_add(fold as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub dataset: String,
    pub model: ModelKind,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_r2: f64,
    pub test_r2: f64,
    pub test_r2_adj: f64,
    /// `train_r2 − test_r2`.
    pub gap: f64,
    pub inner_score: f64,
    pub failed_trials: usize,
    pub best_params: TrialParams,
    pub tune_seconds: f64,
    pub train_seconds: f64,
    pub predict_ms_per_1k: f64,
}

/// Imputes both splits with medians learned on `train`; datasets without
/// missing values pass through untouched.
fn impute_split(train: Dataset, other: Dataset) -> Result<(Dataset, Dataset)> {
    if !train.has_missing() && !other.has_missing() {
        return Ok((train, other));
    }
    let imputer = MedianImputer::fit(train.features())?;
    let t = train.with_features(imputer.apply(train.features())?)?;
    let o = other.with_features(imputer.apply(other.features())?)?;
    Ok((t, o))
}

/// Score of one configuration: mean R² over the inner folds, predictions
/// clipped to each inner training window.
fn inner_score(kind: ModelKind, splits: &[(Dataset, Dataset)], params: &TrialParams, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for (train, val) in splits {
        let model = fit_model(kind, train, params, seed)?;
        let preds = clip_predictions(&model.predict(val.features())?, train.target());
        total += r2(val.target(), &preds)?;
    }
    Ok(total / splits.len() as f64)
}

/// Inner-CV hyperparameter search on `train` (missing values allowed; each
/// inner split is imputed from its own training rows).
pub fn tune(
    train: &Dataset,
    kind: ModelKind,
    space: &SearchSpace,
    budget: usize,
    split_seed: u64,
    model_seed: u64,
    strategy: &mut dyn SearchStrategy,
) -> Result<SearchOutcome> {
    let inner = kfold_split(train.n(), inner_fold_count(train.n()), split_seed)?;
    let splits = (0..inner.k)
        .map(|j| impute_split(train.select_rows(&inner.train_indices(j))?, train.select_rows(&inner.test_indices(j))?))
        .collect::<Result<Vec<_>>>()?;
    search_with(strategy, space, |p| inner_score(kind, &splits, p, model_seed), budget)
}

fn run_fold(
    ds: &Dataset,
    dataset_id: &str,
    kind: ModelKind,
    space: &SearchSpace,
    cfg: &CvConfig,
    fold: usize,
    strategy: &mut dyn SearchStrategy,
) -> Result<FoldResult> {
    let plan = kfold_split(ds.n(), cfg.outer_k, cfg.outer_seed)?;
    let raw_train = ds.select_rows(&plan.train_indices(fold))?;
    let (train, test) = impute_split(raw_train.clone(), ds.select_rows(&plan.test_indices(fold))?)?;

    let tune_start = Instant::now();
    // Inner folds start from the raw outer-train rows so imputation stays
    // inside each inner split.
    let budget = cfg.budget.unwrap_or(space.trial_budget);
    let outcome = tune(&raw_train, kind, space, budget, cfg.inner_seed(fold), cfg.model_seed, strategy)?;
    let tune_seconds = tune_start.elapsed().as_secs_f64();

    let train_start = Instant::now();
    let model = fit_model(kind, &train, &outcome.best, cfg.model_seed)?;
    let train_seconds = train_start.elapsed().as_secs_f64();

    let train_preds = clip_predictions(&model.predict(train.features())?, train.target());
    let predict_start = Instant::now();
    let raw_test = model.predict(test.features())?;
    let predict_ms = predict_start.elapsed().as_secs_f64() * 1e3;
    let test_preds = clip_predictions(&raw_test, train.target());

    let train_r2 = r2(train.target(), &train_preds)?;
    let test_r2 = r2(test.target(), &test_preds)?;
    Ok(FoldResult {
        dataset: dataset_id.to_string(),
        model: kind,
        fold,
        n_train: train.n(),
        n_test: test.n(),
        train_r2,
        test_r2,
        test_r2_adj: adjusted_r2(test_r2, test.n(), test.d()),
        gap: train_r2 - test_r2,
        inner_score: outcome.best_score,
        failed_trials: outcome.trials.iter().filter(|t| t.error.is_some()).count(),
        best_params: outcome.best,
        tune_seconds,
        train_seconds,
        predict_ms_per_1k: predict_ms * 1000.0 / test.n() as f64,
    })
}

/// Nested CV with seeded random search. Any fold failure fails the run.
pub fn nested_cv_run(ds: &Dataset, dataset_id: &str, kind: ModelKind, space: &SearchSpace, cfg: &CvConfig) -> Result<Vec<FoldResult>> {
    nested_cv_run_with(ds, dataset_id, kind, space, cfg, &|seed| Box::new(RandomSearch::new(seed)))
}

/// As [`nested_cv_run`], with one strategy per outer fold built from the
/// fold's search seed.
pub fn nested_cv_run_with(
    ds: &Dataset,
    dataset_id: &str,
    kind: ModelKind,
    space: &SearchSpace,
    cfg: &CvConfig,
    strategy: &(dyn Fn(u64) -> Box<dyn SearchStrategy> + Sync),
) -> Result<Vec<FoldResult>> {
    if cfg.outer_k < 2 || cfg.outer_k > ds.n() {
        return Err(Error::InvalidInput(format!("outer_k must be in [2, n={}], got {}", ds.n(), cfg.outer_k)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel_folds.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let folds: Vec<Result<FoldResult>> = pool.install(|| {
        (0..cfg.outer_k)
            .into_par_iter()
            .map(|f| run_fold(ds, dataset_id, kind, space, cfg, f, strategy(cfg.fold_search_seed(f)).as_mut()))
            .collect()
    });
    folds.into_iter().collect()
}
