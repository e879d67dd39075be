//! Cross-validated hyperparameter search and importance-driven feature selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hybrid::{fit_hybrid, predict_daily, WEEKLY};
use super::metrics::rmse;
use super::Dataset;
use crate::error::{param, Result};
use super::hybrid::ResidualModel;
use crate::gbrt::{variable_importance, GbrtConfig};
use crate::timeseries::StlConfig;

/// One lattice point of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub stl: StlConfig,
    pub gbrt: GbrtConfig,
}

/// Value lists whose Cartesian product forms the search lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub s_window: Vec<usize>,
    pub t_window: Vec<Option<usize>>,
    pub n_rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_child_weight: Vec<f64>,
    pub subsample_rows: Vec<f64>,
    pub subsample_cols: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl ParamGrid {
    /// Every axis pinned to the given base configuration.
    pub fn single(stl: &StlConfig, gbrt: &GbrtConfig) -> Self {
        Self {
            s_window: vec![stl.s_window],
            t_window: vec![stl.t_window],
            n_rounds: vec![gbrt.n_rounds],
            learning_rate: vec![gbrt.learning_rate],
            max_depth: vec![gbrt.max_depth],
            min_child_weight: vec![gbrt.min_child_weight],
            subsample_rows: vec![gbrt.subsample_rows],
            subsample_cols: vec![gbrt.subsample_cols],
            lambda: vec![gbrt.lambda],
        }
    }

    /// Lattice in row-major order (the last axis varies fastest).
    pub fn lattice(&self, stl: &StlConfig, gbrt: &GbrtConfig) -> Vec<Candidate> {
        let mut out = Vec::new();
        for &s_window in &self.s_window {
            for &t_window in &self.t_window {
                for &n_rounds in &self.n_rounds {
                    for &learning_rate in &self.learning_rate {
                        for &max_depth in &self.max_depth {
                            for &min_child_weight in &self.min_child_weight {
                                for &subsample_rows in &self.subsample_rows {
                                    for &subsample_cols in &self.subsample_cols {
                                        for &lambda in &self.lambda {
                                            out.push(Candidate {
                                                stl: StlConfig { s_window, t_window, ..stl.clone() },
                                                gbrt: GbrtConfig {
                                                    n_rounds,
                                                    learning_rate,
                                                    max_depth,
                                                    min_child_weight,
                                                    subsample_rows,
                                                    subsample_cols,
                                                    lambda,
                                                    ..gbrt.clone()
                                                },
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best_index: usize,
    pub best: Candidate,
    /// Mean validation RMSE per lattice point, in lattice order.
    pub scores: Vec<f64>,
}

/// Contiguous time-ordered folds: the series is cut into `k + 1` blocks and
/// fold `j` trains on blocks `0..j` and validates on block `j`.
pub fn time_folds(n: usize, k: usize) -> Result<Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>> {
    if k == 0 {
        return param("need at least one fold");
    }
    let block = n / (k + 1);
    if block < 2 * WEEKLY {
        return param(format!("{n} days split into {} blocks gives {block}-day folds, shorter than two cycles", k + 1));
    }
    Ok((1..=k)
        .map(|j| {
            let end = if j == k { n } else { (j + 1) * block };
            (0..j * block, j * block..end)
        })
        .collect())
}

/// Mean validation RMSE of one configuration over `k` time-ordered folds.
pub fn cv_score(train: &Dataset, candidate: &Candidate, k: usize) -> Result<f64> {
    let folds = time_folds(train.len(), k)?;
    let mut total = 0.0;
    for (fit, val) in &folds {
        let model = fit_hybrid(&train.slice(fit.clone()), &candidate.stl, &candidate.gbrt)?;
        let valid = train.slice(val.clone());
        total += rmse(&predict_daily(&model, &valid)?, &valid.demands())?;
    }
    Ok(total / folds.len() as f64)
}

/// Pick the lattice point with the lowest mean fold RMSE; ties go to the earlier point.
pub fn grid_search_cv(train: &Dataset, grid: &[Candidate], k: usize) -> Result<CvOutcome> {
    if grid.is_empty() {
        return param("search grid is empty");
    }
    time_folds(train.len(), k)?;
    let scores = grid.par_iter().map(|c| cv_score(train, c, k)).collect::<Result<Vec<f64>>>()?;
    let mut best_index = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best_index] {
            best_index = i;
        }
    }
    Ok(CvOutcome { best_index, best: grid[best_index].clone(), scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionOptions {
    /// Minimum normalised importance for a feature to survive a round.
    pub importance_threshold: f64,
    /// Trailing share of the training data used to score each round.
    pub holdout_fraction: f64,
    pub max_iterations: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self { importance_threshold: 0.005, holdout_fraction: 0.2, max_iterations: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRound {
    pub features: Vec<String>,
    pub holdout_rmse: f64,
    pub importance: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub features: Vec<String>,
    pub rounds: Vec<SelectionRound>,
}

/// Repeatedly refit on the surviving features, dropping those whose
/// importance falls below the threshold, until the holdout RMSE stops
/// improving or the set stops changing. Returns the best round's set; on a
/// tie the later (smaller) set wins.
pub fn iterative_feature_selection(
    train: &Dataset,
    stl: &StlConfig,
    gbrt: &GbrtConfig,
    options: &SelectionOptions,
) -> Result<Selection> {
    let t = options.importance_threshold;
    if !(t > 0.0 && t < 1.0) {
        return param(format!("importance threshold must lie in (0, 1), got {t}"));
    }
    if train.feature_names.is_empty() {
        return param("feature selection needs at least one feature");
    }
    if !(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0) {
        return param("holdout fraction must lie in (0, 1)");
    }
    let holdout = ((train.len() as f64 * options.holdout_fraction).round() as usize).max(1);
    let split = train.len().saturating_sub(holdout);
    let fit_part = train.slice(0..split);
    let valid = train.slice(split..train.len());
    let actual = valid.demands();

    let mut features = train.feature_names.clone();
    let mut rounds: Vec<SelectionRound> = Vec::new();
    let mut best: Option<usize> = None;
    for _ in 0..options.max_iterations.max(1) {
        let model = fit_hybrid(&fit_part.select(&features)?, stl, gbrt)?;
        let score = rmse(&predict_daily(&model, &valid.select(&features)?)?, &actual)?;
        let importance = match &model.residual_model {
            ResidualModel::Boosted(e) => variable_importance(e),
            _ => unreachable!("fit_hybrid always boosts"),
        };
        let imp: Vec<(String, f64)> =
            features.iter().map(|f| (f.clone(), importance.get(f).copied().unwrap_or(0.0))).collect();
        rounds.push(SelectionRound { features: features.clone(), holdout_rmse: score, importance: imp.clone() });
        let improved = best.is_none_or(|b| score < rounds[b].holdout_rmse);
        if best.is_none_or(|b| score <= rounds[b].holdout_rmse) {
            best = Some(rounds.len() - 1);
        }
        if !improved {
            break;
        }
        let keep: Vec<String> = imp.into_iter().filter(|(_, v)| *v >= t).map(|(f, _)| f).collect();
        if keep.is_empty() || keep == features {
            break;
        }
        features = keep;
    }
    let best = best.expect("at least one round");
    Ok(Selection { features: rounds[best].features.clone(), rounds })
}
