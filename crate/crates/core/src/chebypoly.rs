//! Chebyshev polynomial regressor: min-max scaling to [−1, 1], Chebyshev
//! expansion, one ridge solve, clipped predictions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cheby::{expand, interaction_features, ChebyBasisConfig};
use crate::data::{population_stats, Dataset, MinMaxScaler};
use crate::error::{Error, Result};
use crate::numkit::{ridge_solve, RidgeSolution};

/// Training-target statistics and the `mean ± 3σ` clipping window they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl TargetStats {
    pub fn of(y: &[f64]) -> Self {
        let (mean, std) = population_stats(y);
        Self { mean, std }
    }

    pub fn window(&self) -> (f64, f64) {
        (self.mean - 3.0 * self.std, self.mean + 3.0 * self.std)
    }

    pub fn clip(&self, v: f64) -> f64 {
        let (lo, hi) = self.window();
        if v.is_nan() { self.mean } else { v.clamp(lo, hi) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyPolyModel {
    pub scaler: MinMaxScaler,
    pub basis: ChebyBasisConfig,
    /// Features taking part in pairwise interactions, fixed at fit time.
    pub interaction_features: Vec<usize>,
    pub alpha: f64,
    pub solution: RidgeSolution,
    pub y_stats: TargetStats,
}

impl ChebyPolyModel {
    pub fn fit(train: &Dataset, basis: ChebyBasisConfig, alpha: f64) -> Result<Self> {
        Self::fit_xy(train.features(), train.target(), basis, alpha)
    }

    pub fn fit_xy(x: &DMatrix<f64>, y: &[f64], basis: ChebyBasisConfig, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("chebypoly alpha must be > 0, got {alpha}")));
        }
        if x.nrows() != y.len() {
            return Err(Error::InvalidInput("feature rows and target length differ".into()));
        }
        let scaler = MinMaxScaler::fit(x, true);
        let scaled = scaler.apply(x)?;
        let interaction_features = interaction_features(&scaled, &basis);
        let design = expand(&scaled, &basis, &interaction_features)?;
        let solution = ridge_solve(&design.values, y, alpha, true)?;
        Ok(Self { scaler, basis, interaction_features, alpha, solution, y_stats: TargetStats::of(y) })
    }

    pub fn n_features(&self) -> usize {
        self.scaler.mins.len()
    }

    /// Linear combination of the basis without the output clip.
    pub fn predict_unclipped(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let scaled = self.scaler.apply(x)?;
        let design = expand(&scaled, &self.basis, &self.interaction_features)?;
        Ok(self.solution.predict(&design.values))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.predict_unclipped(x)?.into_iter().map(|v| self.y_stats.clip(v)).collect())
    }
}
