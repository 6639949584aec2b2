use crate::data::population_stats;
use crate::error::{Error, Result};

/// Finite stand-in for an undefined (−∞) R².
pub const R2_SENTINEL: f64 = -1e9;

/// Coefficient of determination. A constant truth gives 1 for an exact fit
/// and [`R2_SENTINEL`] otherwise.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidInput("r2 needs at least 2 samples".into()));
    }
    if let Some(i) = y_pred.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("prediction {i}")));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean).powi(2)).sum();
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(if ss_res == 0.0 { 1.0 } else { R2_SENTINEL });
    }
    Ok((1.0 - ss_res / ss_tot).max(R2_SENTINEL))
}

/// `1 − (1 − r2)(n − 1)/(n − d − 1)`; returns `r2` unchanged when `n ≤ d + 1`.
pub fn adjusted_r2(r2: f64, n: usize, d: usize) -> f64 {
    if n <= d + 1 {
        return r2;
    }
    let adj = 1.0 - (1.0 - r2) * (n - 1) as f64 / (n - d - 1) as f64;
    adj.max(R2_SENTINEL)
}

/// `[min − 3σ, max + 3σ]` of the training target (population σ).
pub fn clip_window(y_train: &[f64]) -> (f64, f64) {
    let (_, sd) = population_stats(y_train);
    let lo = y_train.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y_train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo - 3.0 * sd, hi + 3.0 * sd)
}

pub fn clip_predictions(preds: &[f64], y_train: &[f64]) -> Vec<f64> {
    let (lo, hi) = clip_window(y_train);
    preds.iter().map(|p| p.clamp(lo, hi)).collect()
}
