use serde::{Deserialize, Serialize};

use super::{evaluate_strategy, learn_policy, LearnedPolicy, Objective, Scenario, Schedule, Strategy, StrategySummary};
use crate::error::{param, Result};
use crate::forecast::{clamp_nonnegative, fit_hybrid, predict_daily, refit_like, Dataset, HybridModel};
use crate::gbrt::GbrtConfig;
use crate::inventory::{AgeProfile, CostParams, Simulation, DEFAULT_SHELF_LIFE};
use crate::timeseries::StlConfig;

/// Historical fixed targets ran about 1.69× the opening stock.
pub const BASELINE_TARGET_RATIO: f64 = 1317.46 / 780.0;

/// Which forecasts the target and reorder levels are learned from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    /// In-sample fitted values over the whole training window.
    #[default]
    InSample,
    /// Out-of-sample forecasts for the last `days` of training from a model
    /// fit on the days before them.
    Holdout { days: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub initial_stock: u64,
    pub shelf_life: usize,
    pub costs: CostParams,
    pub calibration: Calibration,
    pub objective: Objective,
    pub target_grid: Option<Vec<u64>>,
    pub reorder_grid: Option<Vec<u64>>,
    /// Level the baseline orders up to; defaults to a multiple of the opening stock.
    pub baseline_target: Option<u64>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            initial_stock: 780,
            shelf_life: DEFAULT_SHELF_LIFE,
            costs: CostParams::default(),
            calibration: Calibration::InSample,
            objective: Objective::AbsGap,
            target_grid: None,
            reorder_grid: None,
            baseline_target: None,
        }
    }
}

impl PlanConfig {
    pub fn baseline_target(&self) -> u64 {
        self.baseline_target.unwrap_or_else(|| (BASELINE_TARGET_RATIO * self.initial_stock as f64).round() as u64)
    }

    /// Opening stock spread over the youngest ages at the given demand rate.
    pub fn initial_profile(&self, mean_demand: f64) -> Result<AgeProfile> {
        AgeProfile::uniform_young(self.initial_stock, mean_demand.max(1.0), self.shelf_life)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub learned: LearnedPolicy,
    /// Clamped daily forecasts over the evaluation window.
    pub forecast: Vec<f64>,
    pub summaries: Vec<StrategySummary>,
    pub simulations: Vec<Simulation>,
}

fn scenario(data: &Dataset, forecast: Vec<f64>, cfg: &PlanConfig, mean_demand: f64) -> Result<Scenario> {
    let actual = data.records.iter().map(|r| u64::from(r.demand)).collect();
    let start = data.start_date().ok_or_else(|| crate::Error::Parameter("empty evaluation window".into()))?;
    Scenario::new(start, forecast, actual, cfg.initial_profile(mean_demand)?, cfg.costs)
}

/// Learn S* and s* from a model's forecasts over its own training data.
pub fn calibrate(model: &HybridModel, train: &Dataset, cfg: &PlanConfig) -> Result<LearnedPolicy> {
    let mean_demand = mean_demand(train)?;
    let calib = match cfg.calibration {
        Calibration::InSample => scenario(train, clamp_nonnegative(&model.fitted(train)?), cfg, mean_demand)?,
        Calibration::Holdout { days } => {
            if days == 0 || days >= train.len() {
                return param(format!("holdout of {days} days must be shorter than the {}-day training set", train.len()));
            }
            let split = train.len() - days;
            let (fit_part, held) = (train.slice(0..split), train.slice(split..train.len()));
            let fc = clamp_nonnegative(&predict_daily(&refit_like(model, &fit_part)?, &held)?);
            scenario(&held, fc, cfg, mean_demand)?
        }
    };
    learn_policy(&calib, cfg.target_grid.as_deref(), cfg.reorder_grid.as_deref(), cfg.objective)
}

/// Run the baseline, gold, daily and semiweekly strategies over `test`.
/// `train` only sets the age spread of the opening stock.
pub fn compare_strategies(
    model: &HybridModel,
    train: &Dataset,
    test: &Dataset,
    learned: LearnedPolicy,
    cfg: &PlanConfig,
) -> Result<PlanOutcome> {
    if test.is_empty() {
        return param("evaluation window is empty");
    }
    let forecast = clamp_nonnegative(&predict_daily(model, test)?);
    let sc = scenario(test, forecast.clone(), cfg, mean_demand(train)?)?;
    let strategies = [
        Strategy::Baseline { target: cfg.baseline_target() },
        Strategy::Gold,
        Strategy::Proposed(learned.params(Schedule::Daily)),
        Strategy::Proposed(learned.params(Schedule::Semiweekly)),
    ];
    let mut summaries = Vec::new();
    let mut simulations = Vec::new();
    for s in &strategies {
        let (sum, sim) = evaluate_strategy(s, &sc)?;
        summaries.push(sum);
        simulations.push(sim);
    }
    Ok(PlanOutcome { learned, forecast, summaries, simulations })
}

/// Fit on `train`, learn the policy on it, and compare strategies over `test`.
pub fn plan_and_compare(
    train: &Dataset,
    test: &Dataset,
    stl: &StlConfig,
    gbrt: &GbrtConfig,
    cfg: &PlanConfig,
) -> Result<PlanOutcome> {
    let model = fit_hybrid(train, stl, gbrt)?;
    let learned = calibrate(&model, train, cfg)?;
    compare_strategies(&model, train, test, learned, cfg)
}

fn mean_demand(train: &Dataset) -> Result<f64> {
    if train.is_empty() {
        return param("training window is empty");
    }
    Ok(train.demands().iter().sum::<f64>() / train.len() as f64)
}
