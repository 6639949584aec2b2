//! Chebyshev polynomials of the first kind and design-matrix expansion.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `T_n(x)` by the three-term recurrence.
pub fn cheb_eval(degree: usize, x: f64) -> f64 {
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..degree {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Fills `out[k] = T_k(x)` for `k = 0..out.len()`.
pub fn cheb_series(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for k in 2..out.len() {
        out[k] = 2.0 * x * out[k - 1] - out[k - 2];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChebyBasisConfig {
    /// Maximum univariate degree.
    pub complexity: usize,
    pub include_interactions: bool,
    /// 1: raw products only; 2: products and `T_2` of each product.
    pub max_interaction_complexity: u8,
    /// Above this many features only the higher-variance half takes part in
    /// interactions.
    pub high_dim_threshold: usize,
}

impl ChebyBasisConfig {
    pub fn univariate(complexity: usize) -> Self {
        Self { complexity, include_interactions: false, max_interaction_complexity: 1, high_dim_threshold: 30 }
    }

    pub fn with_interactions(complexity: usize, max_interaction_complexity: u8) -> Self {
        Self { include_interactions: true, max_interaction_complexity, ..Self::univariate(complexity) }
    }

    fn validate(&self) -> Result<()> {
        if self.complexity < 1 {
            return Err(Error::InvalidInput("Chebyshev complexity must be >= 1".into()));
        }
        if !(1..=2).contains(&self.max_interaction_complexity) {
            return Err(Error::InvalidInput(format!(
                "max_interaction_complexity must be 1 or 2, got {}",
                self.max_interaction_complexity
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisTerm {
    Constant,
    Univariate { feature: usize, degree: usize },
    Product { i: usize, j: usize },
    ProductT2 { i: usize, j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub columns: Vec<BasisTerm>,
}

/// Features that take part in pairwise products: all of them up to the
/// high-dimension threshold, otherwise the top ⌈d/2⌉ by variance of the
/// (scaled) training data. Returned in ascending index order.
pub fn interaction_features(x_scaled: &DMatrix<f64>, cfg: &ChebyBasisConfig) -> Vec<usize> {
    let d = x_scaled.ncols();
    if !cfg.include_interactions {
        return Vec::new();
    }
    if d <= cfg.high_dim_threshold {
        return (0..d).collect();
    }
    let n = x_scaled.nrows() as f64;
    let variance: Vec<f64> = x_scaled
        .column_iter()
        .map(|c| {
            let m = c.sum() / n;
            c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| variance[b].total_cmp(&variance[a]).then(a.cmp(&b)));
    order.truncate(d.div_ceil(2));
    order.sort_unstable();
    order
}

/// Column count of the expansion for `d` features with `n_eligible`
/// interaction features.
pub fn column_count(d: usize, cfg: &ChebyBasisConfig, n_eligible: usize) -> usize {
    let univariate = 1 + d * cfg.complexity;
    if !cfg.include_interactions {
        return univariate;
    }
    let pairs = n_eligible * n_eligible.saturating_sub(1) / 2;
    univariate + pairs * usize::from(cfg.max_interaction_complexity)
}

/// Expands scaled inputs, choosing the interaction set from `x_scaled` itself.
pub fn build_design_matrix(x_scaled: &DMatrix<f64>, cfg: &ChebyBasisConfig) -> Result<DesignMatrix> {
    let eligible = interaction_features(x_scaled, cfg);
    expand(x_scaled, cfg, &eligible)
}

/// Column layout: `T_0(x_1)`, then `T_1..T_c` of every feature in order, then
/// for each eligible pair `(i, j)`, `i < j`, the product `x_i·x_j` followed by
/// `T_2(x_i·x_j)` when the interaction complexity is 2.
pub fn expand(x_scaled: &DMatrix<f64>, cfg: &ChebyBasisConfig, eligible: &[usize]) -> Result<DesignMatrix> {
    cfg.validate()?;
    let (n, d) = x_scaled.shape();
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("cannot expand an empty matrix".into()));
    }
    if let Some(&bad) = eligible.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidInput(format!("interaction feature {bad} out of range for d = {d}")));
    }
    let c = cfg.complexity;
    let eligible: &[usize] = if cfg.include_interactions { eligible } else { &[] };
    let p = column_count(d, cfg, eligible.len());
    let mut values = DMatrix::<f64>::zeros(n, p);
    let mut columns = Vec::with_capacity(p);

    values.column_mut(0).fill(1.0);
    columns.push(BasisTerm::Constant);
    let mut series = vec![0.0; c + 1];
    for j in 0..d {
        let base = 1 + j * c;
        for i in 0..n {
            cheb_series(x_scaled[(i, j)], &mut series);
            for k in 1..=c {
                values[(i, base + k - 1)] = series[k];
            }
        }
        columns.extend((1..=c).map(|degree| BasisTerm::Univariate { feature: j, degree }));
    }

    let mut col = 1 + d * c;
    for (a, &i) in eligible.iter().enumerate() {
        for &j in &eligible[a + 1..] {
            for r in 0..n {
                values[(r, col)] = x_scaled[(r, i)] * x_scaled[(r, j)];
            }
            columns.push(BasisTerm::Product { i, j });
            col += 1;
            if cfg.max_interaction_complexity == 2 {
                for r in 0..n {
                    values[(r, col)] = cheb_eval(2, values[(r, col - 1)]);
                }
                columns.push(BasisTerm::ProductT2 { i, j });
                col += 1;
            }
        }
    }
    debug_assert_eq!(col, p);
    Ok(DesignMatrix { values, columns })
}
