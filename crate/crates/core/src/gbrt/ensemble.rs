use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objective::gradients_squared_error;
use super::tree::{build_tree_on, TreeNode};
use super::FeatureMatrix;
use crate::error::{check_len, param, Error, Result};

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbrtConfig {
    /// Number of boosting rounds (trees).
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum hessian mass in each child of a split.
    pub min_child_weight: f64,
    /// Fraction of rows sampled (without replacement) per tree.
    pub subsample_rows: f64,
    /// Fraction of columns sampled per tree.
    pub subsample_cols: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Penalty per leaf.
    pub gamma: f64,
    pub seed: u64,
}

impl Default for GbrtConfig {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_child_weight: 1.0,
            subsample_rows: 1.0,
            subsample_cols: 1.0,
            lambda: 1.0,
            gamma: 0.0,
            seed: 0,
        }
    }
}

impl GbrtConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.learning_rate) {
            return param(format!("learning_rate must lie in (0, 1], got {}", self.learning_rate));
        }
        if !unit(self.subsample_rows) || !unit(self.subsample_cols) {
            return param("subsample fractions must lie in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) || !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return param("lambda and gamma must be finite and non-negative");
        }
        if !(self.min_child_weight >= 0.0) {
            return param("min_child_weight must be non-negative");
        }
        if self.max_depth == 0 {
            return param("max_depth must be at least 1");
        }
        Ok(())
    }
}

/// A trained additive tree ensemble.
///
/// Prediction is `base_score + learning_rate * Σ tree(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<TreeNode>,
    pub config: GbrtConfig,
}

pub const MODEL_FORMAT: &str = "rbcplan-gbrt";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document<M> {
    format: String,
    version: u32,
    model: M,
}

impl Ensemble {
    /// A model with no trees.
    pub fn constant(feature_names: Vec<String>, base_score: f64) -> Self {
        let config = GbrtConfig { n_rounds: 0, ..GbrtConfig::default() };
        Self { feature_names, base_score, learning_rate: config.learning_rate, trees: Vec::new(), config }
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = Document { format: MODEL_FORMAT.to_string(), version: MODEL_VERSION, model: self };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document<Ensemble> = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return param(format!(
                "unsupported model document {} v{} (expected {MODEL_FORMAT} v{MODEL_VERSION})",
                doc.format, doc.version
            ));
        }
        Ok(doc.model)
    }
}

/// Fit a boosted ensemble to `y` by second-order boosting on squared error.
pub fn train(x: &FeatureMatrix, y: &[f64], config: &GbrtConfig) -> Result<Ensemble> {
    config.validate()?;
    check_len("targets vs feature rows", y.len(), x.n_rows())?;
    if y.len() < 2 {
        return param("training needs at least two rows");
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return param(format!("target at row {i} is NaN or infinite"));
    }
    let n = y.len();
    let d = x.n_cols();
    let base_score = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base_score; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_rows = ((config.subsample_rows * n as f64).round() as usize).clamp(1, n);
    let n_cols = ((config.subsample_cols * d as f64).round() as usize).clamp(1, d);
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..d).collect();

    let mut trees = Vec::with_capacity(config.n_rounds);
    for _ in 0..config.n_rounds {
        let (g, h) = gradients_squared_error(y, &pred)?;
        let rows = if n_rows < n { sorted_sample(&mut rng, n, n_rows) } else { all_rows.clone() };
        let cols = if n_cols < d { sorted_sample(&mut rng, d, n_cols) } else { all_cols.clone() };
        let tree = build_tree_on(x, &g, &h, &rows, &cols, config)?;
        for (i, p) in pred.iter_mut().enumerate() {
            *p += config.learning_rate * tree.evaluate(x, i);
        }
        trees.push(tree);
    }
    Ok(Ensemble {
        feature_names: x.names().to_vec(),
        base_score,
        learning_rate: config.learning_rate,
        trees,
        config: config.clone(),
    })
}

fn sorted_sample(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut idx = sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Score every row of `x`.
pub fn predict(model: &Ensemble, x: &FeatureMatrix) -> Result<Vec<f64>> {
    if x.names() != model.feature_names.as_slice() {
        return Err(Error::Parameter(format!(
            "feature columns [{}] do not match the model's [{}]",
            x.names().join(","),
            model.feature_names.join(",")
        )));
    }
    Ok((0..x.n_rows())
        .map(|i| model.base_score + model.learning_rate * model.trees.iter().map(|t| t.evaluate(x, i)).sum::<f64>())
        .collect())
}

/// Gain × cover summed per feature over all splits, normalised to sum to 1.
///
/// Features never used in a split get 0. An empty ensemble, or one with no
/// splits, yields an empty map.
pub fn variable_importance(model: &Ensemble) -> BTreeMap<String, f64> {
    let mut raw = vec![0.0f64; model.feature_names.len()];
    for tree in &model.trees {
        tree.visit(&mut |node| {
            if let TreeNode::Split { feature, gain, cover, .. } = node {
                raw[*feature] += gain * *cover as f64;
            }
        });
    }
    let total: f64 = raw.iter().sum();
    if model.trees.is_empty() || total <= 0.0 {
        return BTreeMap::new();
    }
    model.feature_names.iter().cloned().zip(raw.into_iter().map(|v| v / total)).collect()
}
