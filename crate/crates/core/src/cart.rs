//! Axis-aligned variance-reduction regression tree.
//!
//! Used as the `dt` baseline and as the routing structure of the Chebyshev
//! model tree.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// A sample-count threshold given either absolutely or as a fraction of the
/// training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleCount {
    Count(usize),
    Fraction(f64),
}

impl SampleCount {
    /// `⌈fraction·n⌉`, floored at 1.
    pub fn resolve(&self, n: usize) -> usize {
        match *self {
            SampleCount::Count(c) => c.max(1),
            SampleCount::Fraction(f) => ((f * n as f64).ceil() as usize).max(1),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            SampleCount::Count(0) => Err(Error::InvalidInput(format!("{name} count must be >= 1"))),
            SampleCount::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                Err(Error::InvalidInput(format!("{name} fraction must be in (0, 1), got {f}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: SampleCount,
    pub min_samples_split: SampleCount,
}

impl TreeParams {
    pub fn new(max_depth: usize, min_samples_leaf: SampleCount, min_samples_split: SampleCount) -> Self {
        Self { max_depth, min_samples_leaf, min_samples_split }
    }

    pub fn depth(max_depth: usize) -> Self {
        Self::new(max_depth, SampleCount::Count(1), SampleCount::Count(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { leaf_id: usize, value: f64, rows: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Reduction in the node's sum of squared deviations.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub params: TreeParams,
    pub n_features: usize,
    pub n_leaves: usize,
}

const TIE_TOL: f64 = 1e-10;

/// Best split of `rows` over all features and all midpoints between adjacent
/// distinct sorted values, subject to both children holding `min_leaf` rows.
/// Gains within `1e-10` of the node's sum of squares count as equal (identical
/// partitions reached through different features differ only by rounding);
/// equal gains keep the lower feature index, then the lower threshold.
pub fn best_split(x: &DMatrix<f64>, y: &[f64], rows: &[usize], min_leaf: usize) -> Option<SplitCandidate> {
    let m = rows.len();
    if m < 2 * min_leaf.max(1) {
        return None;
    }
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / m as f64;
    let total: f64 = rows.iter().map(|&i| y[i] - mean).sum();
    let base = total * total / m as f64;
    let tol = TIE_TOL * rows.iter().map(|&i| (y[i] - mean).powi(2)).sum::<f64>();
    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
    for f in 0..x.ncols() {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x[(i, f)], y[i] - mean)));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left = 0.0;
        for t in 0..m - 1 {
            left += pairs[t].1;
            let n_left = t + 1;
            if n_left < min_leaf {
                continue;
            }
            if m - n_left < min_leaf {
                break;
            }
            let (a, b) = (pairs[t].0, pairs[t + 1].0);
            if !(a < b) {
                continue;
            }
            let right = total - left;
            let gain = left * left / n_left as f64 + right * right / (m - n_left) as f64 - base;
            if best.is_none_or(|c| gain > c.gain + tol) {
                let mid = 0.5 * (a + b);
                let threshold = if mid < b { mid } else { a };
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }
    best
}

impl RegressionTree {
    pub fn fit(train: &Dataset, params: TreeParams) -> Result<Self> {
        Self::fit_xy(train.features(), train.target(), params)
    }

    /// Greedy growth; a node splits only while depth, sample-count and
    /// positive-gain conditions all hold. Leaves predict the mean target.
    pub fn fit_xy(x: &DMatrix<f64>, y: &[f64], params: TreeParams) -> Result<Self> {
        if params.max_depth < 1 {
            return Err(Error::InvalidInput("max_depth must be >= 1".into()));
        }
        params.min_samples_leaf.validate("min_samples_leaf")?;
        params.min_samples_split.validate("min_samples_split")?;
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::InvalidInput("tree needs matching, non-empty features and target".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tree features".into()));
        }
        let n = y.len();
        let min_leaf = params.min_samples_leaf.resolve(n);
        let min_split = params.min_samples_split.resolve(n).max(2);

        let mut tree = RegressionTree { nodes: Vec::new(), params, n_features: x.ncols(), n_leaves: 0 };
        let rows: Vec<usize> = (0..n).collect();
        tree.grow(x, y, rows, 0, min_leaf, min_split);
        Ok(tree)
    }

    fn grow(&mut self, x: &DMatrix<f64>, y: &[f64], rows: Vec<usize>, depth: usize, min_leaf: usize, min_split: usize) -> usize {
        let id = self.nodes.len();
        let m = rows.len();
        let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / m as f64;
        let sse: f64 = rows.iter().map(|&i| (y[i] - mean).powi(2)).sum();

        let split = if depth < self.params.max_depth && m >= min_split && sse > 0.0 {
            best_split(x, y, &rows, min_leaf).filter(|s| s.gain > 1e-12 * sse)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf { leaf_id: self.n_leaves, value: mean, rows });
            self.n_leaves += 1;
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| x[(i, split.feature)] <= split.threshold);
        self.nodes.push(Node::Split { feature: split.feature, threshold: split.threshold, left: 0, right: 0 });
        let left = self.grow(x, y, left_rows, depth + 1, min_leaf, min_split);
        let right = self.grow(x, y, right_rows, depth + 1, min_leaf, min_split);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[id] {
            *l = left;
            *r = right;
        }
        id
    }

    fn leaf_node(&self, point: &[f64]) -> &Node {
        let mut node = &self.nodes[0];
        while let Node::Split { feature, threshold, left, right } = node {
            node = if point[*feature] <= *threshold { &self.nodes[*left] } else { &self.nodes[*right] };
        }
        node
    }

    /// Leaf id reached by `point`; `x[feature] <= threshold` goes left.
    pub fn route(&self, point: &[f64]) -> Result<usize> {
        if point.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: point.len() });
        }
        match self.leaf_node(point) {
            Node::Leaf { leaf_id, .. } => Ok(*leaf_id),
            Node::Split { .. } => unreachable!("descent ends at a leaf"),
        }
    }

    pub fn route_rows(&self, x: &DMatrix<f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, got: x.ncols() });
        }
        let mut point = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                point.iter_mut().enumerate().for_each(|(j, p)| *p = x[(i, j)]);
                self.route(&point)
            })
            .collect()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let values = self.leaf_values();
        Ok(self.route_rows(x)?.into_iter().map(|l| values[l]).collect())
    }

    /// Mean training target per leaf, indexed by leaf id.
    pub fn leaf_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_leaves];
        for node in &self.nodes {
            if let Node::Leaf { leaf_id, value, .. } = node {
                out[*leaf_id] = *value;
            }
        }
        out
    }

    /// Training rows per leaf, indexed by leaf id.
    pub fn leaf_rows(&self) -> Vec<&[usize]> {
        let mut out: Vec<&[usize]> = vec![&[]; self.n_leaves];
        for node in &self.nodes {
            if let Node::Leaf { leaf_id, rows, .. } = node {
                out[*leaf_id] = rows;
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}
