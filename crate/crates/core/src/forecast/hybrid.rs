//! Trend + seasonal from STL plus a learned residual model.

use chrono::{Days, NaiveDate};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{param, Result};
use crate::gbrt::{self, Ensemble, FeatureMatrix, GbrtConfig};
use crate::timeseries::{stl_decompose, stl_extend_with, Decomposition, StlConfig};

/// Seasonal cycle of daily demand.
pub const WEEKLY: usize = 7;

/// Ordinary least squares with intercept; missing cells take the training mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub column_means: Vec<f64>,
}

impl LinearModel {
    pub fn fit(x: &FeatureMatrix, y: &[f64]) -> Result<Self> {
        let (n, d) = (x.n_rows(), x.n_cols());
        let column_means: Vec<f64> = (0..d)
            .map(|c| {
                let present: Vec<f64> = x.column(c).iter().flatten().copied().collect();
                if present.is_empty() { 0.0 } else { present.iter().sum::<f64>() / present.len() as f64 }
            })
            .collect();
        let design = DMatrix::from_fn(n, d + 1, |i, j| {
            if j == 0 { 1.0 } else { x.get(i, j - 1).unwrap_or(column_means[j - 1]) }
        });
        let target = DVector::from_column_slice(y);
        let beta = design
            .svd(true, true)
            .solve(&target, 1e-10)
            .map_err(|e| crate::Error::Parameter(format!("least squares failed: {e}")))?;
        Ok(Self { intercept: beta[0], coefficients: beta.iter().skip(1).copied().collect(), column_means })
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| {
                self.intercept
                    + (0..x.n_cols())
                        .map(|c| self.coefficients[c] * x.get(i, c).unwrap_or(self.column_means[c]))
                        .sum::<f64>()
            })
            .collect()
    }
}

/// What forecasts the STL residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ResidualModel {
    /// Residual forecast is 0 (STL alone).
    Zero,
    Linear(LinearModel),
    Boosted(Ensemble),
}

/// Demand model: `ŷ = trend + seasonal + residual forecast`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub stl_config: StlConfig,
    pub period: usize,
    pub decomposition: Decomposition,
    pub residual_model: ResidualModel,
    pub feature_names: Vec<String>,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
}

pub const HYBRID_FORMAT: &str = "rbcplan-hybrid";
pub const HYBRID_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document<M> {
    format: String,
    version: u32,
    model: M,
}

impl HybridModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Document { format: HYBRID_FORMAT.into(), version: HYBRID_VERSION, model: self })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document<HybridModel> = serde_json::from_str(text)?;
        if doc.format != HYBRID_FORMAT || doc.version != HYBRID_VERSION {
            return param(format!("unsupported model document {} v{}", doc.format, doc.version));
        }
        Ok(doc.model)
    }

    /// In-sample trend + seasonal + residual fit on the training window.
    pub fn fitted(&self, train: &Dataset) -> Result<Vec<f64>> {
        let base = self.decomposition.fitted();
        if train.len() != base.len() || train.start_date() != Some(self.train_start) {
            return param("dataset does not match the model's training window");
        }
        let resid = self.residual_forecast(train)?;
        Ok(base.iter().zip(resid).map(|(b, r)| b + r).collect())
    }

    fn residual_forecast(&self, data: &Dataset) -> Result<Vec<f64>> {
        Ok(match &self.residual_model {
            ResidualModel::Zero => vec![0.0; data.len()],
            ResidualModel::Linear(m) => m.predict(&data.select(&self.feature_names)?.feature_matrix()?),
            ResidualModel::Boosted(e) => gbrt::predict(e, &data.select(&self.feature_names)?.feature_matrix()?)?,
        })
    }
}

struct Prepared {
    decomposition: Decomposition,
    start: NaiveDate,
    end: NaiveDate,
}

fn prepare(train: &Dataset, stl_config: &StlConfig) -> Result<Prepared> {
    let series = train.demand_series(WEEKLY)?;
    let decomposition = stl_decompose(&series, stl_config)?;
    Ok(Prepared {
        decomposition,
        start: series.start_date,
        end: train.end_date().expect("non-empty after decomposition"),
    })
}

fn assemble(train: &Dataset, stl_config: &StlConfig, p: Prepared, residual_model: ResidualModel) -> HybridModel {
    HybridModel {
        stl_config: stl_config.clone(),
        period: WEEKLY,
        decomposition: p.decomposition,
        residual_model,
        feature_names: train.feature_names.clone(),
        train_start: p.start,
        train_end: p.end,
    }
}

/// Decompose demand and boost trees on the residual using every feature of `train`.
pub fn fit_hybrid(train: &Dataset, stl_config: &StlConfig, gbrt_config: &GbrtConfig) -> Result<HybridModel> {
    let p = prepare(train, stl_config)?;
    let x = train.feature_matrix()?;
    let ensemble = gbrt::train(&x, &p.decomposition.residual, gbrt_config)?;
    Ok(assemble(train, stl_config, p, ResidualModel::Boosted(ensemble)))
}

/// STL alone: the residual forecast is zero.
pub fn fit_stl_alone(train: &Dataset, stl_config: &StlConfig) -> Result<HybridModel> {
    let p = prepare(train, stl_config)?;
    Ok(assemble(train, stl_config, p, ResidualModel::Zero))
}

/// STL plus ordinary least squares on the residual.
pub fn fit_stl_linear(train: &Dataset, stl_config: &StlConfig) -> Result<HybridModel> {
    let p = prepare(train, stl_config)?;
    let linear = LinearModel::fit(&train.feature_matrix()?, &p.decomposition.residual)?;
    Ok(assemble(train, stl_config, p, ResidualModel::Linear(linear)))
}

/// Fit a model of the same kind and configuration on other data.
pub fn refit_like(model: &HybridModel, train: &Dataset) -> Result<HybridModel> {
    let train = train.select(&model.feature_names)?;
    match &model.residual_model {
        ResidualModel::Zero => fit_stl_alone(&train, &model.stl_config),
        ResidualModel::Linear(_) => fit_stl_linear(&train, &model.stl_config),
        ResidualModel::Boosted(e) => fit_hybrid(&train, &model.stl_config, &e.config),
    }
}

/// Forecast the days in `future`, which must start the day after training ends.
///
/// Values are raw; callers that need non-negative demand clamp them.
pub fn predict_daily(model: &HybridModel, future: &Dataset) -> Result<Vec<f64>> {
    if future.is_empty() {
        return Ok(Vec::new());
    }
    let expected = model.train_end + Days::new(1);
    if future.start_date() != Some(expected) {
        return param(format!(
            "forecast must start on {expected}, the day after training ends; got {}",
            future.start_date().expect("non-empty")
        ));
    }
    future.check_contiguous()?;
    let base = stl_extend_with(&model.decomposition, future.len(), model.period, model.stl_config.extension)?;
    let resid = model.residual_forecast(future)?;
    Ok(base.iter().zip(resid).map(|(b, r)| b + r).collect())
}

/// Replace negative forecasts with zero.
pub fn clamp_nonnegative(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| v.max(0.0)).collect()
}
