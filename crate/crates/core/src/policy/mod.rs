//! Integrated ordering: a learned inventory target S* and reorder level s*
//! turn demand forecasts into order quantities, and strategies are compared
//! on the same demand stream.
//!
//! Period `i`'s order is placed at the end of day `i − 1` and arrives before
//! day `i`'s demand. Under the semiweekly schedule orders are placed only on
//! Mondays and Thursdays, so they arrive on Tuesdays and Fridays and cover
//! the Tue–Thu and Fri–Mon blocks.

mod pipeline;
mod search;
mod summary;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Result};
use crate::forecast::block_len;
use crate::inventory::{step, AgeProfile, CostParams, Simulation};

pub use pipeline::{calibrate, compare_strategies, plan_and_compare, Calibration, PlanConfig, PlanOutcome, BASELINE_TARGET_RATIO};
pub use search::{
    cost_under_actual, default_reorder_grid, default_target_grid,
    learn_policy, optimize_reorder, optimize_target, LearnedPolicy, Objective, Sweep,
};
pub use summary::{
    comparison_csv, comparison_text, evaluate_strategy, summarize, MeanSd, Strategy, StrategySummary,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Daily,
    /// Orders placed on Mondays and Thursdays only.
    Semiweekly,
}

impl Schedule {
    /// Whether the order arriving on `date` can exist under this schedule.
    pub fn delivers_on(self, date: NaiveDate) -> bool {
        match self {
            Schedule::Daily => true,
            Schedule::Semiweekly => matches!(date.weekday(), Weekday::Tue | Weekday::Fri),
        }
    }
}

/// Day on which the order for `period_date` is placed.
pub fn placement_date(period_date: NaiveDate) -> NaiveDate {
    period_date - Days::new(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    /// Inventory target S: post-arrival stock never exceeds it.
    pub target: u64,
    /// Reorder level s: orders are placed only when stock is below it.
    pub reorder: u64,
    pub schedule: Schedule,
}

impl PolicyParams {
    pub fn new(target: u64, reorder: u64, schedule: Schedule) -> Result<Self> {
        let p = Self { target, reorder, schedule };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reorder > self.target {
            return param(format!("reorder level {} exceeds inventory target {}", self.reorder, self.target));
        }
        Ok(())
    }
}

/// Forecast rounded to whole units, negatives treated as zero.
pub(crate) fn units(y_hat: f64) -> u64 {
    if y_hat.is_finite() && y_hat > 0.0 { y_hat.round() as u64 } else { 0 }
}

/// Order size given the previous period's closing stock and the demand
/// forecast for the periods the order must cover.
///
/// Below the reorder level the forecast is clamped into `[s − I, S − I]`;
/// otherwise nothing is ordered.
pub fn order_quantity(inventory: u64, y_hat: f64, params: &PolicyParams) -> Result<u64> {
    params.validate()?;
    Ok(order_quantity_unchecked(inventory, y_hat, params))
}

pub(crate) fn order_quantity_unchecked(inventory: u64, y_hat: f64, p: &PolicyParams) -> u64 {
    if inventory >= p.reorder {
        return 0;
    }
    units(y_hat).clamp(p.reorder - inventory, p.target - inventory)
}

/// Order used when only the target is in force: the forecast capped at `S − I`.
pub fn target_capped_order(inventory: u64, y_hat: f64, target: u64) -> u64 {
    units(y_hat).min(target.saturating_sub(inventory))
}

/// Aligned inputs for a policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Date of the first period.
    pub start: NaiveDate,
    /// Daily demand forecasts.
    pub forecast: Vec<f64>,
    /// Realised daily demand.
    pub actual: Vec<u64>,
    pub initial: AgeProfile,
    pub costs: CostParams,
}

impl Scenario {
    pub fn new(start: NaiveDate, forecast: Vec<f64>, actual: Vec<u64>, initial: AgeProfile, costs: CostParams) -> Result<Self> {
        check_len("forecast vs actual demand", forecast.len(), actual.len())?;
        costs.validate()?;
        if let Some(i) = forecast.iter().position(|v| !v.is_finite()) {
            return param(format!("forecast at period {i} is not finite"));
        }
        Ok(Self { start, forecast, actual, initial, costs })
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start + Days::new(i as u64)
    }

    /// Forecast demand the order arriving in period `i` must cover.
    pub fn covered_forecast(&self, i: usize, schedule: Schedule) -> f64 {
        match schedule {
            Schedule::Daily => self.forecast[i],
            Schedule::Semiweekly => {
                let end = (i + block_len(self.date(i))).min(self.len());
                self.forecast[i..end].iter().sum()
            }
        }
    }

    /// Run the period loop with orders chosen from the current closing stock.
    pub(crate) fn run(&self, costs: &CostParams, mut order: impl FnMut(usize, u64) -> u64) -> Simulation {
        let mut state = self.initial.clone();
        let mut outcomes = Vec::with_capacity(self.len());
        for (i, &y) in self.actual.iter().enumerate() {
            let z = order(i, state.total());
            let (next, out) = step(&state, z, y, costs);
            state = next;
            outcomes.push(out);
        }
        Simulation::from_outcomes(outcomes, state)
    }

    /// Ordering exactly the realised demand each period.
    pub fn simulate_gold(&self) -> Simulation {
        self.run(&self.costs, |i, _| self.actual[i])
    }

    /// Raising stock to a fixed level every day.
    pub fn simulate_order_up_to(&self, level: u64, costs: &CostParams) -> Simulation {
        self.run(costs, |_, inv| level.saturating_sub(inv))
    }

    /// Daily forecast orders capped by the target only.
    pub fn simulate_target(&self, target: u64) -> Simulation {
        self.run(&self.costs, |i, inv| target_capped_order(inv, self.forecast[i], target))
    }

    /// The full reorder-level / target rule under its schedule.
    pub fn simulate_policy(&self, params: &PolicyParams) -> Result<Simulation> {
        params.validate()?;
        Ok(self.run(&self.costs, |i, inv| {
            if !params.schedule.delivers_on(self.date(i)) {
                return 0;
            }
            order_quantity_unchecked(inv, self.covered_forecast(i, params.schedule), params)
        }))
    }
}
