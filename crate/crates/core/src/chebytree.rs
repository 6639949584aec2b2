//! Chebyshev model tree: CART routing, an independent univariate Chebyshev
//! regressor per leaf, and a constant fallback for small leaves.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cart::{RegressionTree, SampleCount, TreeParams};
use crate::cheby::ChebyBasisConfig;
use crate::chebypoly::{ChebyPolyModel, TargetStats};
use crate::data::{select_rows, Dataset};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafModel {
    Poly(ChebyPolyModel),
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyTreeParams {
    pub complexity: usize,
    pub max_depth: usize,
    pub min_samples_leaf: SampleCount,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyTreeModel {
    pub tree: RegressionTree,
    /// Indexed by leaf id.
    pub leaf_models: Vec<LeafModel>,
    pub params: ChebyTreeParams,
    pub y_stats: TargetStats,
}

/// Smallest leaf that gets a polynomial: two rows per univariate coefficient,
/// and never fewer than ten.
pub fn fallback_threshold(complexity: usize) -> usize {
    (2 * (complexity + 1)).max(10)
}

impl ChebyTreeModel {
    pub fn fit(train: &Dataset, params: ChebyTreeParams) -> Result<Self> {
        Self::fit_xy(train.features(), train.target(), params)
    }

    pub fn fit_xy(x: &DMatrix<f64>, y: &[f64], params: ChebyTreeParams) -> Result<Self> {
        let tree_params = TreeParams::new(params.max_depth, params.min_samples_leaf, SampleCount::Count(2));
        let tree = RegressionTree::fit_xy(x, y, tree_params)?;
        let values = tree.leaf_values();
        let min_rows = fallback_threshold(params.complexity);
        let basis = ChebyBasisConfig::univariate(params.complexity);
        let leaf_models = tree
            .leaf_rows()
            .into_iter()
            .zip(values)
            .map(|(rows, value)| {
                if rows.len() < min_rows {
                    return Ok(LeafModel::Constant(value));
                }
                let leaf_x = select_rows(x, rows);
                let leaf_y: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
                ChebyPolyModel::fit_xy(&leaf_x, &leaf_y, basis, params.alpha).map(LeafModel::Poly)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tree, leaf_models, params, y_stats: TargetStats::of(y) })
    }

    /// Leaf-local predictions before the global `mean ± 3σ` clip.
    pub fn predict_unclipped(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let leaves = self.tree.route_rows(x)?;
        let mut out = vec![0.0; x.nrows()];
        for (leaf, model) in self.leaf_models.iter().enumerate() {
            let rows: Vec<usize> = (0..leaves.len()).filter(|&i| leaves[i] == leaf).collect();
            if rows.is_empty() {
                continue;
            }
            match model {
                LeafModel::Constant(v) => rows.iter().for_each(|&i| out[i] = *v),
                LeafModel::Poly(m) => {
                    let preds = m.predict_unclipped(&select_rows(x, &rows))?;
                    for (&i, p) in rows.iter().zip(preds) {
                        out[i] = p;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.predict_unclipped(x)?.into_iter().map(|v| self.y_stats.clip(v)).collect())
    }
}
