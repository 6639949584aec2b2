use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::knn::squared_distances;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeans {
    pub centroids: DMatrix<f64>,
    pub labels: Vec<usize>,
    /// Within-cluster SSE after each assignment step.
    pub sse_trace: Vec<f64>,
}

/// Lloyd iterations from a seeded k-means++ initialisation. A cluster that
/// empties is re-seeded at the point farthest from its assigned centroid.
pub fn kmeans(x: &DMatrix<f64>, k: usize, seed: u64, max_iter: usize) -> Result<KMeans> {
    let (n, d) = x.shape();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cluster count {k} must be in [1, n={n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(x, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut sse_trace = Vec::new();

    for iter in 0..max_iter.max(1) {
        let (new_labels, point_cost) = assign(x, &centroids);
        sse_trace.push(point_cost.iter().sum());
        let changed = new_labels != labels;
        labels = new_labels;
        if !changed && iter > 0 {
            break;
        }

        let mut sums = DMatrix::<f64>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            counts[c] += 1;
            for j in 0..d {
                sums[(c, j)] += x[(i, j)];
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..d {
                    centroids[(c, j)] = sums[(c, j)] / counts[c] as f64;
                }
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| point_cost[a].total_cmp(&point_cost[b]).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                for j in 0..d {
                    centroids[(c, j)] = x[(far, j)];
                }
            }
        }
    }
    Ok(KMeans { centroids, labels, sse_trace })
}

fn plus_plus_init(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let mut chosen = vec![rng.random_range(0..n)];
    let row = |i: usize| -> Vec<f64> { x.row(i).iter().copied().collect() };
    let mut best = squared_distances(x, &row(chosen[0]));
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in best.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // Rounding can leave `pick` on an already chosen zero-weight point.
            if best[pick] == 0.0 {
                pick = best.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (b, dnew) in best.iter_mut().zip(squared_distances(x, &row(next))) {
            *b = b.min(dnew);
        }
    }
    DMatrix::from_fn(k, d, |c, j| x[(chosen[c], j)])
}

fn assign(x: &DMatrix<f64>, centroids: &DMatrix<f64>) -> (Vec<usize>, Vec<f64>) {
    let n = x.nrows();
    let mut labels = vec![0usize; n];
    let mut cost = vec![f64::INFINITY; n];
    for c in 0..centroids.nrows() {
        let centre: Vec<f64> = centroids.row(c).iter().copied().collect();
        for (i, dist) in squared_distances(x, &centre).into_iter().enumerate() {
            if dist < cost[i] {
                cost[i] = dist;
                labels[i] = c;
            }
        }
    }
    (labels, cost)
}

/// Within-cluster sum of squares of an arbitrary labelling.
pub fn labelled_sse(x: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let d = x.ncols();
    let mut sums = DMatrix::<f64>::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &c) in labels.iter().enumerate() {
        counts[c] += 1;
        for j in 0..d {
            sums[(c, j)] += x[(i, j)];
        }
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| (0..d).map(|j| (x[(i, j)] - sums[(c, j)] / counts[c] as f64).powi(2)).sum::<f64>())
        .sum()
}
