use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Squared Euclidean distance from `point` to every row of `x`.
pub fn squared_distances(x: &DMatrix<f64>, point: &[f64]) -> Vec<f64> {
    let mut dist = vec![0.0; x.nrows()];
    for (j, col) in x.column_iter().enumerate() {
        let p = point[j];
        for (d, v) in dist.iter_mut().zip(col.iter()) {
            let diff = v - p;
            *d += diff * diff;
        }
    }
    dist
}

/// Indices of the `k` rows of `x` closest to `point`, nearest first. Equal
/// distances are ordered by row index. `exclude` removes one row from the
/// candidate set.
pub fn knn_indices(x: &DMatrix<f64>, point: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
    if point.len() != x.ncols() {
        return Err(Error::DimensionMismatch { expected: x.ncols(), got: point.len() });
    }
    let available = x.nrows() - usize::from(exclude.is_some_and(|e| e < x.nrows()));
    if k > available {
        return Err(Error::InvalidInput(format!("k = {k} exceeds the {available} candidate rows")));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut cand: Vec<(f64, usize)> = squared_distances(x, point)
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(i, d)| (d, i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    Ok(cand.into_iter().map(|(_, i)| i).collect())
}

/// Neighbours of training row `row`, optionally excluding the row itself.
pub fn knn_of_row(x: &DMatrix<f64>, row: usize, k: usize, exclude_self: bool) -> Result<Vec<usize>> {
    if row >= x.nrows() {
        return Err(Error::InvalidInput(format!("row {row} out of range")));
    }
    let point: Vec<f64> = x.row(row).iter().copied().collect();
    knn_indices(x, &point, k, exclude_self.then_some(row))
}
