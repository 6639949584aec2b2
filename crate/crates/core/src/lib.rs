//! Smooth-basis regressors and the benchmark harness used to compare them.
//!
//! Estimators: [`erbf::ErbfModel`] (anisotropic RBF network),
//! [`chebypoly::ChebyPolyModel`] (global Chebyshev expansion),
//! [`chebytree::ChebyTreeModel`] (CART routing with Chebyshev leaves), plus
//! the [`ridge_model::RidgeModel`] and [`cart::RegressionTree`] baselines.
//! [`model`] wraps all five behind one fit/predict/serialise interface and
//! [`harness`] runs nested cross-validation over them.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cart;
pub mod cheby;
pub mod chebypoly;
pub mod chebytree;
pub mod data;
pub mod erbf;
pub mod error;
pub mod harness;
pub mod model;
pub mod numkit;
pub mod ridge_model;
pub mod synth;

pub use cart::{RegressionTree, SampleCount, TreeParams};
pub use cheby::ChebyBasisConfig;
pub use chebypoly::ChebyPolyModel;
pub use chebytree::{ChebyTreeModel, ChebyTreeParams};
pub use data::Dataset;
pub use erbf::{ErbfConfig, ErbfModel};
pub use error::{Error, Result};
pub use model::{fit_model, FittedModel, ModelDocument, ModelKind};
pub use ridge_model::RidgeModel;
pub use synth::{SynthKind, SynthSpec};
