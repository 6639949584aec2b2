//! The `ridge` baseline: linear ridge regression on standardized features.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::numkit::{ridge_solve, RidgeSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub scaler: Standardizer,
    pub solution: RidgeSolution,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn fit(train: &Dataset, alpha: f64) -> Result<Self> {
        Self::fit_xy(train.features(), train.target(), alpha)
    }

    pub fn fit_xy(x: &DMatrix<f64>, y: &[f64], alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("ridge alpha must be > 0, got {alpha}")));
        }
        let scaler = Standardizer::fit(x);
        let solution = ridge_solve(&scaler.apply(x)?, y, alpha, true)?;
        Ok(Self { scaler, solution, alpha })
    }

    /// Slopes mapped back to the raw feature scale.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.solution.weights.iter().zip(&self.scaler.stds).map(|(w, s)| w / s).collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.solution.predict(&self.scaler.apply(x)?))
    }
}
