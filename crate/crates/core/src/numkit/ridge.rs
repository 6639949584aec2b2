use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl RidgeSolution {
    pub fn predict(&self, phi: &DMatrix<f64>) -> Vec<f64> {
        let w = DVector::from_column_slice(&self.weights);
        (phi * w).iter().map(|v| v + self.intercept).collect()
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Solves `(ΦᵀΦ + αI) w = Φᵀy`.
///
/// With `fit_intercept`, columns and target are centred first and the
/// intercept is recovered afterwards, so it is never penalised. When the
/// design is wider than it is tall the equivalent `n × n` dual system
/// `(ΦΦᵀ + αI) a = y, w = Φᵀa` is factorised instead.
pub fn ridge_solve(phi: &DMatrix<f64>, y: &[f64], alpha: f64, fit_intercept: bool) -> Result<RidgeSolution> {
    let (n, p) = phi.shape();
    if n == 0 || p == 0 {
        return Err(Error::InvalidInput("ridge_solve needs a non-empty design matrix".into()));
    }
    if y.len() != n {
        return Err(Error::InvalidInput(format!("design has {n} rows, target has {}", y.len())));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput(format!("ridge penalty must be finite and >= 0, got {alpha}")));
    }
    if let Some(pos) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("design entry {pos}")));
    }
    if let Some(pos) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("target entry {pos}")));
    }

    let (col_means, y_mean) = if fit_intercept {
        let means: Vec<f64> = phi.column_iter().map(|c| c.sum() / n as f64).collect();
        (means, y.iter().sum::<f64>() / n as f64)
    } else {
        (vec![0.0; p], 0.0)
    };
    let mut centred = phi.clone();
    if fit_intercept {
        for (j, mut col) in centred.column_iter_mut().enumerate() {
            col.add_scalar_mut(-col_means[j]);
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let weights = if p <= n {
        let gram = centred.transpose() * &centred;
        let rhs = centred.tr_mul(&yc);
        solve_spd(gram, &rhs, alpha)?
    } else {
        let gram = &centred * centred.transpose();
        let dual = solve_spd(gram, &yc, alpha)?;
        centred.tr_mul(&dual)
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Singular);
    }
    let intercept = y_mean - weights.iter().zip(&col_means).map(|(w, m)| w * m).sum::<f64>();
    Ok(RidgeSolution { weights: weights.iter().copied().collect(), intercept })
}

/// Cholesky solve of `(G + αI) x = b`, retrying with a trace-scaled jitter
/// when the factorisation fails.
fn solve_spd(mut gram: DMatrix<f64>, rhs: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    let m = gram.nrows();
    let trace = gram.trace();
    for i in 0..m {
        gram[(i, i)] += alpha;
    }
    if alpha == 0.0 {
        let chol = gram.cholesky().ok_or(Error::Singular)?;
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        // Squared diagonal ratio approximates the reciprocal condition number.
        if !(lo > 0.0) || (lo / hi).powi(2) < 1e-15 {
            return Err(Error::Singular);
        }
        return Ok(chol.solve(rhs));
    }
    let mut jitter = 1e-10 * trace.max(f64::MIN_POSITIVE) / m as f64;
    for _ in 0..4 {
        if let Some(chol) = gram.clone().cholesky() {
            return Ok(chol.solve(rhs));
        }
        for i in 0..m {
            gram[(i, i)] += jitter;
        }
        jitter *= 100.0;
    }
    Err(Error::Singular)
}
