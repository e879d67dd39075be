use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PolicyParams, Scenario, Schedule};
use crate::error::{param, Result};
use crate::inventory::Simulation;

/// What the target and reorder sweeps minimise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Distance between the candidate's mean cost and the cost of ordering
    /// exactly the realised demand.
    #[default]
    AbsGap,
    /// The candidate's mean cost itself.
    MinCost,
}

/// One sweep over a candidate grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub candidates: Vec<u64>,
    pub average_cost: Vec<f64>,
    pub objective: Vec<f64>,
    /// Mean cost when ordering the realised demand.
    pub reference_cost: f64,
    pub best_index: usize,
    pub best: u64,
}

/// Mean period cost when each order equals that period's realised demand.
pub fn cost_under_actual(scenario: &Scenario) -> Result<f64> {
    if scenario.is_empty() {
        return param("demand stream is empty");
    }
    Ok(scenario.simulate_gold().average_cost)
}

/// Candidate targets from the opening stock to twice it, in steps of 10.
pub fn default_target_grid(initial_stock: u64) -> Vec<u64> {
    (initial_stock..=2 * initial_stock).step_by(10).collect()
}

/// Candidate reorder levels from 0 to the target, in steps of 10.
pub fn default_reorder_grid(target: u64) -> Vec<u64> {
    (0..=target).step_by(10).collect()
}

fn sweep(
    scenario: &Scenario,
    grid: &[u64],
    objective: Objective,
    run: impl Fn(u64) -> Result<Simulation> + Sync,
) -> Result<Sweep> {
    let reference_cost = cost_under_actual(scenario)?;
    let average_cost = grid.par_iter().map(|&c| run(c).map(|s| s.average_cost)).collect::<Result<Vec<f64>>>()?;
    let objective: Vec<f64> = average_cost
        .iter()
        .map(|&c| match objective {
            Objective::AbsGap => (reference_cost - c).abs(),
            Objective::MinCost => c,
        })
        .collect();
    let mut best_index = 0;
    for i in 1..grid.len() {
        let (o, b) = (objective[i], objective[best_index]);
        if o < b || (o == b && grid[i] < grid[best_index]) {
            best_index = i;
        }
    }
    Ok(Sweep { candidates: grid.to_vec(), average_cost, objective, reference_cost, best_index, best: grid[best_index] })
}

/// Choose the inventory target S from `grid`, ordering the daily forecast
/// capped at `S − I`. Ties go to the smallest target.
pub fn optimize_target(scenario: &Scenario, grid: &[u64], objective: Objective) -> Result<Sweep> {
    if grid.is_empty() {
        return param("target grid is empty");
    }
    sweep(scenario, grid, objective, |s| Ok(scenario.simulate_target(s)))
}

/// Choose the reorder level s from `grid` with the target fixed at `target`.
/// Ties go to the smallest level.
pub fn optimize_reorder(
    scenario: &Scenario,
    target: u64,
    grid: &[u64],
    schedule: Schedule,
    objective: Objective,
) -> Result<Sweep> {
    if grid.is_empty() {
        return param("reorder grid is empty");
    }
    if let Some(bad) = grid.iter().find(|&&s| s > target) {
        return param(format!("reorder level {bad} exceeds inventory target {target}"));
    }
    sweep(scenario, grid, objective, |s| scenario.simulate_policy(&PolicyParams { target, reorder: s, schedule }))
}

/// Target and per-schedule reorder levels learned on one calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedPolicy {
    pub target: u64,
    pub reorder_daily: u64,
    pub reorder_semiweekly: u64,
    pub target_sweep: Sweep,
    pub daily_sweep: Sweep,
    pub semiweekly_sweep: Sweep,
}

impl LearnedPolicy {
    pub fn params(&self, schedule: Schedule) -> PolicyParams {
        let reorder = match schedule {
            Schedule::Daily => self.reorder_daily,
            Schedule::Semiweekly => self.reorder_semiweekly,
        };
        PolicyParams { target: self.target, reorder, schedule }
    }
}

/// Learn S* first, then s* separately for each schedule. `None` grids use the defaults.
pub fn learn_policy(
    scenario: &Scenario,
    target_grid: Option<&[u64]>,
    reorder_grid: Option<&[u64]>,
    objective: Objective,
) -> Result<LearnedPolicy> {
    let default_targets = default_target_grid(scenario.initial.total());
    let target_sweep = optimize_target(scenario, target_grid.unwrap_or(&default_targets), objective)?;
    let target = target_sweep.best;
    let default_levels = default_reorder_grid(target);
    let levels = reorder_grid.unwrap_or(&default_levels);
    let daily_sweep = optimize_reorder(scenario, target, levels, Schedule::Daily, objective)?;
    let semiweekly_sweep = optimize_reorder(scenario, target, levels, Schedule::Semiweekly, objective)?;
    Ok(LearnedPolicy {
        target,
        reorder_daily: daily_sweep.best,
        reorder_semiweekly: semiweekly_sweep.best,
        target_sweep,
        daily_sweep,
        semiweekly_sweep,
    })
}
