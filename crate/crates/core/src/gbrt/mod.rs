//! Gradient-boosted regression trees with Newton leaf weights.

mod ensemble;
mod matrix;
mod objective;
mod tree;

pub use ensemble::{predict, train, variable_importance, Ensemble, GbrtConfig, MODEL_FORMAT, MODEL_VERSION};
pub use matrix::FeatureMatrix;
pub use objective::{gradients_squared_error, leaf_weight, split_gain};
pub use tree::{build_tree, TreeNode};
