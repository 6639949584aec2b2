//! Anisotropic (ellipsoidal) RBF network.
//!
//! Prediction is `f(x) = Σ_k w_k φ_k(x) + b` with
//! `φ_k(x) = exp(-½ Σ_j (x_j − c_kj)² / σ_kj²)`. Training runs in three
//! stages on standardized features:
//!
//! 1. centre placement, either sampled proportionally to local Lipschitz
//!    estimates or taken from k-means centroids;
//! 2. width initialisation from each centre's neighbourhood (local ridge
//!    slopes or local spread);
//! 3. L-BFGS on the log-widths `θ = ln σ` with the output layer held fixed,
//!    after which the output weights are re-solved by ridge regression.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebypoly::TargetStats;
use crate::data::{select_rows, Dataset, Standardizer};
use crate::error::{Error, Result};
use crate::numkit::{kmeans, knn_indices, knn_of_row, lbfgs_minimize, ridge_solve, LbfgsOptions};

/// Penalty of the neighbourhood ridge fits used for width initialisation.
pub const LOCAL_RIDGE_ALPHA: f64 = 1e-3;
/// Lower bound on `|β_j|` in the local-ridge width formula.
pub const BETA_FLOOR: f64 = 1e-8;
/// Initial widths are clamped to `[WIDTH_FLOOR, WIDTH_CAP]` (standardized units).
pub const WIDTH_CAP: f64 = 1e3;
pub const WIDTH_FLOOR: f64 = 1e-3;
/// Log-width range kept after optimisation; beyond it activations are
/// numerically indistinguishable from the limits.
const LOG_WIDTH_RANGE: (f64, f64) = (-18.420680743952367, 18.420680743952367);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NRbf {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterInit {
    Lipschitz,
    Kmeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthInit {
    LocalRidge,
    LocalVariance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErbfConfig {
    pub n_rbf: NRbf,
    pub alpha: f64,
    pub center_init: CenterInit,
    pub width_init: WidthInit,
    pub width_optim_iters: usize,
    pub lipschitz_k: usize,
    pub lipschitz_eps: f64,
    pub lipschitz_clip_pct: f64,
    pub seed: u64,
}

impl Default for ErbfConfig {
    fn default() -> Self {
        Self {
            n_rbf: NRbf::Auto,
            alpha: 1e-3,
            center_init: CenterInit::Lipschitz,
            width_init: WidthInit::LocalRidge,
            width_optim_iters: 30,
            lipschitz_k: 5,
            lipschitz_eps: 1e-12,
            lipschitz_clip_pct: 99.0,
            seed: 42,
        }
    }
}

/// `clip(max(40, 2d), 20, min(200, ⌊n/10⌋))`. When the upper bound falls
/// below 20 it wins, floored at one centre.
pub fn auto_k(n: usize, d: usize) -> usize {
    let hi = 200.min(n / 10).max(1);
    let v = 40.max(2 * d);
    if hi < 20 { hi } else { v.clamp(20, hi) }
}

/// Linear-interpolation percentile (`pct` in [0, 100]).
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = pct / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Local Lipschitz estimate per training point over its `k` nearest
/// neighbours, capped at the `clip_pct` percentile.
pub fn estimate_lipschitz(x: &DMatrix<f64>, y: &[f64], k: usize, eps: f64, clip_pct: f64) -> Result<Vec<f64>> {
    let n = x.nrows();
    if n <= k {
        return Err(Error::InvalidInput(format!("Lipschitz estimate needs more than k = {k} rows, got {n}")));
    }
    let mut lips = Vec::with_capacity(n);
    for i in 0..n {
        let nbrs = knn_of_row(x, i, k, true)?;
        let li = nbrs
            .iter()
            .map(|&j| {
                let dist = (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum::<f64>().sqrt();
                (y[i] - y[j]).abs() / (dist + eps)
            })
            .fold(0.0, f64::max);
        lips.push(li);
    }
    let cap = percentile(&lips, clip_pct);
    Ok(lips.into_iter().map(|l| l.min(cap)).collect())
}

/// Draws `k` distinct indices, each draw proportional to the remaining
/// weights; falls back to uniform once the remaining weight is zero.
pub fn weighted_sample_without_replacement(weights: &[f64], k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut out = Vec::with_capacity(k);
    while out.len() < k && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&i| weights[i]).sum();
        let pos = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (p, &i) in remaining.iter().enumerate() {
                if weights[i] > 0.0 {
                    pick = Some(p);
                    if target < weights[i] {
                        break;
                    }
                    target -= weights[i];
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..remaining.len())
        };
        out.push(remaining.remove(pos));
    }
    out
}

/// Stage 1 on standardized features.
pub fn place_centers(x: &DMatrix<f64>, y: &[f64], k: usize, cfg: &ErbfConfig) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot place {k} centres on {n} rows")));
    }
    match cfg.center_init {
        CenterInit::Lipschitz => {
            let lips = estimate_lipschitz(x, y, cfg.lipschitz_k.min(n - 1), cfg.lipschitz_eps, cfg.lipschitz_clip_pct)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let idx = weighted_sample_without_replacement(&lips, k, &mut rng);
            Ok(select_rows(x, &idx))
        }
        CenterInit::Kmeans => Ok(kmeans(x, k, cfg.seed, 100)?.centroids),
    }
}

/// Neighbourhood size for width initialisation: `min(100, ⌊n/K⌋)` floored at 10.
pub fn neighbourhood_size(n: usize, k: usize) -> usize {
    (n / k.max(1)).clamp(10, 100).min(n)
}

fn column_variance(x: &DMatrix<f64>, j: usize) -> f64 {
    let col = x.column(j);
    let m = col.mean();
    col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / col.len() as f64
}

/// Stage 2. `y` is divided by `y_scale` before the local ridge fits so slopes
/// are in standardized units on both axes.
pub fn init_widths(x: &DMatrix<f64>, y: &[f64], y_scale: f64, centers: &DMatrix<f64>, method: WidthInit) -> Result<DMatrix<f64>> {
    let (n, d) = x.shape();
    let k_centres = centers.nrows();
    let m = neighbourhood_size(n, k_centres);
    if m < 2 {
        return Err(Error::InvalidInput(format!("neighbourhood of {m} rows is too small for width initialisation")));
    }
    let root_d = (d as f64).sqrt();
    let y_scale = if y_scale > 0.0 { y_scale } else { 1.0 };
    let mut widths = DMatrix::<f64>::zeros(k_centres, d);
    for c in 0..k_centres {
        let centre: Vec<f64> = centers.row(c).iter().copied().collect();
        let nbrs = knn_indices(x, &centre, m, None)?;
        let local = select_rows(x, &nbrs);
        match method {
            WidthInit::LocalRidge => {
                let local_y: Vec<f64> = nbrs.iter().map(|&i| y[i] / y_scale).collect();
                let beta = ridge_solve(&local, &local_y, LOCAL_RIDGE_ALPHA, true)?.weights;
                let tau = 1.5 * root_d;
                for j in 0..d {
                    let s = tau * (column_variance(&local, j) / beta[j].abs().max(BETA_FLOOR)).sqrt();
                    widths[(c, j)] = s.clamp(WIDTH_FLOOR, WIDTH_CAP);
                }
            }
            WidthInit::LocalVariance => {
                for j in 0..d {
                    let s = column_variance(&local, j).sqrt() * root_d;
                    widths[(c, j)] = s.clamp(WIDTH_FLOOR, WIDTH_CAP);
                }
            }
        }
    }
    Ok(widths)
}

/// `n × K` activation matrix.
pub fn activations(x: &DMatrix<f64>, centers: &DMatrix<f64>, widths: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let k = centers.nrows();
    let mut phi = DMatrix::<f64>::zeros(n, k);
    for c in 0..k {
        let mut col = phi.column_mut(c);
        for j in 0..d {
            let (cj, inv) = (centers[(c, j)], 1.0 / (widths[(c, j)] * widths[(c, j)]));
            for (q, xv) in col.iter_mut().zip(x.column(j).iter()) {
                let diff = xv - cj;
                *q += diff * diff * inv;
            }
        }
        col.iter_mut().for_each(|q| *q = (-0.5 * *q).exp());
    }
    phi
}

/// Training MSE and its gradient with respect to the log-widths, holding
/// centres, weights and bias fixed. `theta` is `K × d` in row-major order.
///
/// `∂mse/∂θ_kj = (2/n) Σ_i r_i w_k φ_ik (x_ij − c_kj)² / σ_kj²`.
pub fn loss_and_grad(
    theta: &[f64],
    x: &DMatrix<f64>,
    y: &[f64],
    centers: &DMatrix<f64>,
    weights: &[f64],
    bias: f64,
) -> Result<(f64, Vec<f64>)> {
    let (n, d) = x.shape();
    let k = centers.nrows();
    if theta.len() != k * d {
        return Err(Error::InvalidInput(format!("expected {} log-widths, got {}", k * d, theta.len())));
    }
    if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("log-width {i}")));
    }
    let widths = DMatrix::from_row_slice(k, d, theta).map(f64::exp);
    let phi = activations(x, centers, &widths);
    let mut resid = vec![bias; n];
    for (c, &w) in weights.iter().enumerate() {
        for (r, p) in resid.iter_mut().zip(phi.column(c).iter()) {
            *r += w * p;
        }
    }
    for (i, (r, yi)) in resid.iter_mut().zip(y).enumerate() {
        *r -= yi;
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("residual at row {i}")));
        }
    }
    let mse = resid.iter().map(|r| r * r).sum::<f64>() / n as f64;

    let mut grad = vec![0.0; k * d];
    let mut v = vec![0.0; n];
    for c in 0..k {
        if weights[c] == 0.0 {
            continue;
        }
        let scale = 2.0 * weights[c] / n as f64;
        for ((vi, r), p) in v.iter_mut().zip(&resid).zip(phi.column(c).iter()) {
            *vi = r * p;
        }
        for j in 0..d {
            let (cj, inv) = (centers[(c, j)], 1.0 / (widths[(c, j)] * widths[(c, j)]));
            let s: f64 = v.iter().zip(x.column(j).iter()).map(|(vi, xv)| vi * (xv - cj) * (xv - cj)).sum();
            let g = scale * s * inv;
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient entry ({c}, {j})")));
            }
            grad[c * d + j] = g;
        }
    }
    Ok((mse, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErbfModel {
    pub config: ErbfConfig,
    pub feature_scaler: Standardizer,
    pub centers: DMatrix<f64>,
    pub widths: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub y_stats: TargetStats,
}

/// Diagnostics of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ErbfTrace {
    pub n_centers: usize,
    pub mse_before_width_optim: f64,
    pub mse_after_width_optim: f64,
    pub lbfgs_iterations: usize,
}

impl ErbfModel {
    pub fn fit(train: &Dataset, config: ErbfConfig) -> Result<Self> {
        Self::fit_xy(train.features(), train.target(), config)
    }

    pub fn fit_xy(x: &DMatrix<f64>, y: &[f64], config: ErbfConfig) -> Result<Self> {
        Self::fit_traced(x, y, config).map(|(m, _)| m)
    }

    pub fn fit_traced(x: &DMatrix<f64>, y: &[f64], config: ErbfConfig) -> Result<(Self, ErbfTrace)> {
        let (n, d) = x.shape();
        if n != y.len() {
            return Err(Error::InvalidInput("feature rows and target length differ".into()));
        }
        if n < 2 {
            return Err(Error::InvalidInput("erbf needs at least 2 rows".into()));
        }
        if !(config.alpha >= 0.0) {
            return Err(Error::InvalidInput(format!("erbf alpha must be >= 0, got {}", config.alpha)));
        }
        let feature_scaler = Standardizer::fit(x);
        let xs = feature_scaler.apply(x)?;
        let y_stats = TargetStats::of(y);
        let k = match config.n_rbf {
            NRbf::Auto => auto_k(n, d),
            NRbf::Fixed(k) => k,
        };
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("resolved centre count {k} must be in [1, n={n}]")));
        }

        let centers = place_centers(&xs, y, k, &config)?;
        let widths0 = init_widths(&xs, y, y_stats.std, &centers, config.width_init)?;
        let phi = activations(&xs, &centers, &widths0);
        let initial = ridge_solve(&phi, y, config.alpha, true)?;

        let theta0: Vec<f64> = widths0.transpose().iter().map(|s| s.ln()).collect();
        let opt = lbfgs_minimize(
            |theta| loss_and_grad(theta, &xs, y, &centers, &initial.weights, initial.intercept),
            &theta0,
            LbfgsOptions::with_max_iter(config.width_optim_iters),
        )?;
        let (lo, hi) = LOG_WIDTH_RANGE;
        let widths = DMatrix::from_row_slice(k, d, &opt.x).map(|t| t.clamp(lo, hi).exp());

        let phi = activations(&xs, &centers, &widths);
        let solution = ridge_solve(&phi, y, config.alpha, true)?;
        let trace = ErbfTrace {
            n_centers: k,
            mse_before_width_optim: opt.loss_trace[0],
            mse_after_width_optim: opt.loss,
            lbfgs_iterations: opt.iterations,
        };
        let model = Self {
            config,
            feature_scaler,
            centers,
            widths,
            weights: solution.weights,
            bias: solution.intercept,
            y_stats,
        };
        Ok((model, trace))
    }

    pub fn n_centers(&self) -> usize {
        self.centers.nrows()
    }

    pub fn predict_unclipped(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let xs = self.feature_scaler.apply(x)?;
        let phi = activations(&xs, &self.centers, &self.widths);
        Ok((0..x.nrows())
            .map(|i| self.bias + phi.row(i).iter().zip(&self.weights).map(|(p, w)| p * w).sum::<f64>())
            .collect())
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.predict_unclipped(x)?.into_iter().map(|v| self.y_stats.clip(v)).collect())
    }
}
