//! Matched-accuracy comparison of generalisation gaps: among datasets where
//! two models score within a threshold of each other, which one overfits less.

use serde::{Deserialize, Serialize};

use crate::model::ModelKind;

pub const DEFAULT_GAP_THRESHOLD: f64 = 0.02;
const THRESHOLD_SLACK: f64 = 1e-12;

pub const DEFAULT_GAP_PAIRS: [(ModelKind, ModelKind); 3] = [
    (ModelKind::ChebyPoly, ModelKind::Dt),
    (ModelKind::Erbf, ModelKind::Dt),
    (ModelKind::ChebyTree, ModelKind::Dt),
];

/// Per-(dataset, model) means fed to the comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub dataset: String,
    pub model: ModelKind,
    pub mean_r2_adj: f64,
    pub mean_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedDataset {
    pub dataset: String,
    pub r2_diff: f64,
    pub smooth_gap: f64,
    pub tree_gap: f64,
    /// 1 smooth win, 0 tree win, 0.5 tie.
    pub smooth_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapWinRow {
    pub smooth: ModelKind,
    pub tree: ModelKind,
    pub matched: usize,
    pub smooth_wins: f64,
    pub tree_wins: f64,
    /// `None` when nothing matched.
    pub smooth_fraction: Option<f64>,
    pub details: Vec<MatchedDataset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapWinTable {
    pub threshold: f64,
    pub rows: Vec<GapWinRow>,
    pub total_matched: usize,
    pub total_smooth_wins: f64,
    pub overall_smooth_fraction: Option<f64>,
}

/// A dataset is matched when `|ΔR̄²| ≤ threshold`; the strictly smaller mean
/// gap wins and equal gaps split the point.
pub fn matched_accuracy_gap_wins(cells: &[GapCell], pairs: &[(ModelKind, ModelKind)], threshold: f64) -> GapWinTable {
    let find = |ds: &str, m: ModelKind| cells.iter().find(|c| c.dataset == ds && c.model == m);
    let mut rows = Vec::new();
    for &(smooth, tree) in pairs {
        let mut details = Vec::new();
        for a in cells.iter().filter(|c| c.model == smooth) {
            let Some(b) = find(&a.dataset, tree) else { continue };
            let r2_diff = a.mean_r2_adj - b.mean_r2_adj;
            if r2_diff.abs() > threshold + THRESHOLD_SLACK {
                continue;
            }
            let smooth_score = if a.mean_gap < b.mean_gap {
                1.0
            } else if a.mean_gap > b.mean_gap {
                0.0
            } else {
                0.5
            };
            details.push(MatchedDataset {
                dataset: a.dataset.clone(),
                r2_diff,
                smooth_gap: a.mean_gap,
                tree_gap: b.mean_gap,
                smooth_score,
            });
        }
        let matched = details.len();
        let smooth_wins = details.iter().fold(0.0, |acc, d| acc + d.smooth_score);
        rows.push(GapWinRow {
            smooth,
            tree,
            matched,
            smooth_wins,
            tree_wins: matched as f64 - smooth_wins,
            smooth_fraction: (matched > 0).then(|| smooth_wins / matched as f64),
            details,
        });
    }
    let total_matched = rows.iter().map(|r| r.matched).sum();
    let total_smooth_wins = rows.iter().fold(0.0, |acc, r| acc + r.smooth_wins);
    GapWinTable {
        threshold,
        rows,
        total_matched,
        total_smooth_wins,
        overall_smooth_fraction: (total_matched > 0).then(|| total_smooth_wins / total_matched as f64),
    }
}
