//! Rank aggregation and the Friedman / Nemenyi tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-tailed Studentized-range quantiles `q_0.05(k) / √2` for k = 2..=10.
const NEMENYI_Q05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];

/// χ² upper 5% critical values for df = 1..=10.
const CHI2_CRIT05: [f64; 10] = [3.841, 5.991, 7.815, 9.488, 11.070, 12.592, 14.067, 15.507, 16.919, 18.307];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// `datasets × models`; 1 is best.
    pub ranks: Vec<Vec<f64>>,
    pub mean_ranks: Vec<f64>,
    pub rank1_counts: Vec<usize>,
    pub rank2_counts: Vec<usize>,
}

/// Ranks within one row. Higher score is better, ties share the average
/// rank and failures (`None`) all take rank `k`. Also returns the
/// competition (minimum) rank used for top-2 counts.
fn rank_row(scores: &[Option<f64>]) -> (Vec<f64>, Vec<usize>) {
    let k = scores.len();
    let mut avg = vec![k as f64; k];
    let mut min = vec![k; k];
    let mut ok: Vec<usize> = (0..k).filter(|&j| scores[j].is_some()).collect();
    ok.sort_by(|&a, &b| scores[b].unwrap().total_cmp(&scores[a].unwrap()));
    let mut start = 0;
    while start < ok.len() {
        let mut end = start + 1;
        while end < ok.len() && scores[ok[end]] == scores[ok[start]] {
            end += 1;
        }
        let mean = (start + 1 + end) as f64 / 2.0;
        for &j in &ok[start..end] {
            avg[j] = mean;
            min[j] = start + 1;
        }
        start = end;
    }
    (avg, min)
}

pub fn rank_models(scores: &[Vec<Option<f64>>]) -> Result<RankTable> {
    let k = scores.first().map_or(0, |r| r.len());
    if scores.is_empty() || k < 2 {
        return Err(Error::InvalidInput("ranking needs at least 1 dataset and 2 models".into()));
    }
    if scores.iter().any(|r| r.len() != k) {
        return Err(Error::InvalidInput("ragged score table".into()));
    }
    let mut ranks = Vec::with_capacity(scores.len());
    let mut rank1_counts = vec![0; k];
    let mut rank2_counts = vec![0; k];
    for row in scores {
        let (avg, min) = rank_row(row);
        for j in 0..k {
            match min[j] {
                1 if row[j].is_some() => rank1_counts[j] += 1,
                2 if row[j].is_some() => rank2_counts[j] += 1,
                _ => {}
            }
        }
        ranks.push(avg);
    }
    let n = scores.len() as f64;
    let mean_ranks = (0..k).map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    Ok(RankTable { ranks, mean_ranks, rank1_counts, rank2_counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub df: usize,
    pub critical_value: f64,
    pub significant: bool,
}

/// `χ²_F = 12n/(k(k+1)) · [Σ_j R̄_j² − k(k+1)²/4]` at α = 0.05.
pub fn friedman_test(ranks: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = ranks.len();
    let k = ranks.first().map_or(0, |r| r.len());
    if n < 2 || k < 2 {
        return Err(Error::InvalidInput(format!("Friedman test needs n >= 2 and k >= 2 (got n={n}, k={k})")));
    }
    if k - 1 > CHI2_CRIT05.len() {
        return Err(Error::InvalidInput(format!("no χ² critical value tabulated for df = {}", k - 1)));
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = (0..k)
        .map(|j| {
            let m = ranks.iter().map(|r| r[j]).sum::<f64>() / nf;
            m * m
        })
        .sum();
    let raw = 12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0);
    // Identical rank rows leave only rounding noise.
    let statistic = if raw.abs() < 1e-9 { 0.0 } else { raw };
    let critical_value = CHI2_CRIT05[k - 2];
    Ok(FriedmanResult { statistic, df: k - 1, critical_value, significant: statistic > critical_value })
}

/// Nemenyi critical difference `q_α(k) · √(k(k+1)/(6n))`; only α = 0.05.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    if !(2..=10).contains(&k) {
        return Err(Error::InvalidInput(format!("Nemenyi table covers 2..=10 models, got {k}")));
    }
    if alpha != 0.05 {
        return Err(Error::InvalidInput(format!("only alpha = 0.05 is supported, got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidInput("Nemenyi CD needs at least one dataset".into()));
    }
    let (kf, nf) = (k as f64, n as f64);
    Ok(NEMENYI_Q05[k - 2] * (kf * (kf + 1.0) / (6.0 * nf)).sqrt())
}
