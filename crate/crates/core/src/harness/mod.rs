//! Evaluation protocol: nested cross-validation with hyperparameter search,
//! metrics, rank statistics and report generation.

pub mod bench;
pub mod cv;
pub mod gapwins;
pub mod metrics;
pub mod report;
pub mod search;
pub mod stats;

pub use bench::{run_bench, BenchConfig, BenchOutcome, DatasetEntry, OutputPaths};
pub use cv::{nested_cv_run, nested_cv_run_with, tune, CvConfig, FoldResult};
pub use gapwins::{matched_accuracy_gap_wins, GapCell, GapWinTable, DEFAULT_GAP_PAIRS, DEFAULT_GAP_THRESHOLD};
pub use metrics::{adjusted_r2, clip_predictions, clip_window, r2, R2_SENTINEL};
pub use report::{build_report, mask_timings, read_results, write_results, BenchmarkReport, CellStats, CellSummary, PairFailure, RunRecord, TIMING_FIELDS};
pub use search::{random_search, search_with, ParamSpec, RandomSearch, SearchOutcome, SearchSpace, SearchStrategy, Trial};
pub use stats::{friedman_test, nemenyi_cd, rank_models, FriedmanResult, RankTable};
