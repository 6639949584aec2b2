//! Shared numerical kernels: regularised least squares, k-means,
//! nearest-neighbour search and an L-BFGS minimiser.

mod kmeans;
mod knn;
mod lbfgs;
mod ridge;

pub use kmeans::{kmeans, labelled_sse, KMeans};
pub use knn::{knn_indices, knn_of_row, squared_distances};
pub use lbfgs::{lbfgs_minimize, LbfgsOptions, OptimResult};
pub use ridge::{ridge_solve, RidgeSolution};
