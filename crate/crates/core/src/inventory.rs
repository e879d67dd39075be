//! Age-stratified FIFO inventory for a perishable product.
//!
//! Each period: an order placed at the end of the previous period arrives,
//! demand is served oldest-first, any shortfall is covered by an urgent
//! delivery that never enters stock, surviving units age by one period and
//! units reaching the shelf life are discarded.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, param, Error, Result};

/// Default shelf life at the hospital, in periods.
pub const DEFAULT_SHELF_LIFE: usize = 32;

/// End-of-period stock by age. `counts[m - 1]` holds units of age `m`,
/// for `m = 1..shelf_life - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeProfile {
    counts: Vec<u64>,
    shelf_life: usize,
}

impl AgeProfile {
    pub fn new(counts: Vec<u64>, shelf_life: usize) -> Result<Self> {
        if shelf_life == 0 {
            return param("shelf life must be positive");
        }
        if counts.len() != shelf_life - 1 {
            return param(format!("age profile needs {} buckets for shelf life {shelf_life}, got {}", shelf_life - 1, counts.len()));
        }
        Ok(Self { counts, shelf_life })
    }

    pub fn empty(shelf_life: usize) -> Result<Self> {
        Self::new(vec![0; shelf_life.saturating_sub(1)], shelf_life)
    }

    /// Spread `total` units evenly over ages `1..=ceil(total / mean_demand)`,
    /// capped at the oldest non-expired age. Leftover units go to the youngest ages.
    pub fn uniform_young(total: u64, mean_demand: f64, shelf_life: usize) -> Result<Self> {
        if shelf_life < 2 && total > 0 {
            return param("a shelf life of 1 cannot hold initial stock");
        }
        if !(mean_demand > 0.0) {
            return param(format!("mean demand must be positive, got {mean_demand}"));
        }
        let mut counts = vec![0; shelf_life.saturating_sub(1)];
        if total == 0 {
            return Self::new(counts, shelf_life);
        }
        let ages = ((total as f64 / mean_demand).ceil() as usize).clamp(1, shelf_life - 1);
        let base = total / ages as u64;
        let extra = (total % ages as u64) as usize;
        for (m, c) in counts.iter_mut().take(ages).enumerate() {
            *c = base + u64::from(m < extra);
        }
        Self::new(counts, shelf_life)
    }

    /// Build from individual unit ages (each in `1..shelf_life`).
    pub fn from_unit_ages(ages: &[usize], shelf_life: usize) -> Result<Self> {
        let mut counts = vec![0; shelf_life.saturating_sub(1)];
        for &a in ages {
            if a == 0 || a >= shelf_life {
                return param(format!("unit age {a} outside 1..{shelf_life}"));
            }
            counts[a - 1] += 1;
        }
        Self::new(counts, shelf_life)
    }

    /// Every unit's age, youngest first.
    pub fn unit_ages(&self) -> Vec<usize> {
        self.counts.iter().enumerate().flat_map(|(m, &c)| std::iter::repeat_n(m + 1, c as usize)).collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shelf_life(&self) -> usize {
        self.shelf_life
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Per-order, per-unit cost coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Cost per routine order.
    pub routine_delivery: f64,
    /// Cost per unit held at the end of a period.
    pub holding: f64,
    /// Cost per unit delivered urgently.
    pub urgent: f64,
    /// Cost per expired unit.
    pub wastage: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { routine_delivery: 100.0, holding: 1.0, urgent: 300.0, wastage: 50.0 }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.routine_delivery) && ok(self.holding) && ok(self.urgent) && ok(self.wastage)) {
            return param("cost coefficients must be finite and non-negative");
        }
        Ok(())
    }

    /// Period cost from its components.
    pub fn period_cost(&self, order: u64, end_inventory: u64, urgent: u64, expired: u64) -> f64 {
        let delivery = if order > 0 { self.routine_delivery } else { 0.0 };
        delivery + self.holding * end_inventory as f64 + self.urgent * urgent as f64 + self.wastage * expired as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub order_placed: bool,
    pub order: u64,
    pub demand: u64,
    /// Units delivered urgently to cover unmet demand.
    pub urgent: u64,
    pub expired: u64,
    pub end_inventory: u64,
    pub cost: f64,
}

impl PeriodOutcome {
    pub fn recompute_cost(&self, costs: &CostParams) -> f64 {
        costs.period_cost(self.order, self.end_inventory, self.urgent, self.expired)
    }
}

/// Advance one period: receive `order`, serve `demand`, age and discard.
pub fn step(state: &AgeProfile, order: u64, demand: u64, costs: &CostParams) -> (AgeProfile, PeriodOutcome) {
    let big_m = state.shelf_life;
    let prev = &state.counts;
    let pos = |v: i128| v.max(0) as u64;
    let y = i128::from(demand);
    let z = i128::from(order);

    // remaining[m] = demand left after issuing every unit of previous age >= m
    let mut remaining = vec![0i128; big_m + 1];
    let mut older = 0i128;
    remaining[big_m] = y;
    for m in (1..big_m).rev() {
        older += i128::from(prev[m - 1]);
        remaining[m] = (y - older).max(0);
    }

    // next[m] for m = 1..=M; next[M] is this period's expiry
    let mut next = vec![0u64; big_m + 1];
    next[1] = pos(z - remaining[1]);
    for m in 2..=big_m {
        next[m] = pos(i128::from(prev[m - 2]) - remaining[m]);
    }
    let expired = next[big_m];
    let counts: Vec<u64> = next[1..big_m].to_vec();
    let prior_total: i128 = prev.iter().map(|&c| i128::from(c)).sum();
    let after_total: i128 = next[1..=big_m].iter().map(|&c| i128::from(c)).sum();
    // unmet demand = demand - units issued from stock and arrivals
    let urgent = pos(y - z - prior_total + after_total);
    let end_inventory: u64 = counts.iter().sum();
    let outcome = PeriodOutcome {
        order_placed: order > 0,
        order,
        demand,
        urgent,
        expired,
        end_inventory,
        cost: costs.period_cost(order, end_inventory, urgent, expired),
    };
    (AgeProfile { counts, shelf_life: big_m }, outcome)
}

/// Outcome of a multi-period run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub outcomes: Vec<PeriodOutcome>,
    /// Mean period cost; 0 for an empty horizon.
    pub average_cost: f64,
    pub final_state: AgeProfile,
}

impl Simulation {
    pub(crate) fn from_outcomes(outcomes: Vec<PeriodOutcome>, final_state: AgeProfile) -> Self {
        let average_cost = if outcomes.is_empty() {
            0.0
        } else {
            outcomes.iter().map(|o| o.cost).sum::<f64>() / outcomes.len() as f64
        };
        Self { outcomes, average_cost, final_state }
    }
}

/// Fold [`step`] over aligned order and demand streams.
pub fn simulate(initial: &AgeProfile, orders: &[u64], demands: &[u64], costs: &CostParams) -> Result<Simulation> {
    check_len("orders vs demands", orders.len(), demands.len())?;
    costs.validate()?;
    let mut state = initial.clone();
    let mut outcomes = Vec::with_capacity(orders.len());
    for (&z, &y) in orders.iter().zip(demands) {
        let (next, out) = step(&state, z, y, costs);
        state = next;
        outcomes.push(out);
    }
    Ok(Simulation::from_outcomes(outcomes, state))
}

/// Unit-level reference simulation: every unit is tracked with its own age,
/// issued strictly oldest-first and discarded on reaching `shelf_life`.
pub fn brute_force_unit_sim(
    initial_ages: &[usize],
    shelf_life: usize,
    orders: &[u64],
    demands: &[u64],
    costs: &CostParams,
) -> Result<Simulation> {
    check_len("orders vs demands", orders.len(), demands.len())?;
    costs.validate()?;
    if shelf_life == 0 {
        return param("shelf life must be positive");
    }
    if let Some(a) = initial_ages.iter().find(|&&a| a == 0 || a >= shelf_life) {
        return param(format!("unit age {a} outside 1..{shelf_life}"));
    }
    let mut units: Vec<usize> = initial_ages.to_vec();
    let mut outcomes = Vec::with_capacity(orders.len());
    for (&z, &y) in orders.iter().zip(demands) {
        units.extend(std::iter::repeat_n(0, z as usize));
        // oldest at the back
        units.sort_unstable();
        let mut unmet = 0u64;
        for _ in 0..y {
            if units.pop().is_none() {
                unmet += 1;
            }
        }
        for a in units.iter_mut() {
            *a += 1;
        }
        let before = units.len();
        units.retain(|&a| a < shelf_life);
        let expired = (before - units.len()) as u64;
        let end_inventory = units.len() as u64;
        outcomes.push(PeriodOutcome {
            order_placed: z > 0,
            order: z,
            demand: y,
            urgent: unmet,
            expired,
            end_inventory,
            cost: costs.period_cost(z, end_inventory, unmet, expired),
        });
    }
    let final_state = AgeProfile::from_unit_ages(&units, shelf_life)?;
    Ok(Simulation::from_outcomes(outcomes, final_state))
}

const TRAJECTORY_HEADER: [&str; 7] = ["period", "order", "demand", "urgent", "expired", "end_inventory", "cost"];

/// Write `period,order,demand,urgent,expired,end_inventory,cost` rows (periods 1-based).
pub fn write_trajectory_csv<W: io::Write>(outcomes: &[PeriodOutcome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for (i, o) in outcomes.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            o.order.to_string(),
            o.demand.to_string(),
            o.urgent.to_string(),
            o.expired.to_string(),
            o.end_inventory.to_string(),
            o.cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: io::Read>(reader: R) -> Result<Vec<PeriodOutcome>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Schema { row: 0, column: headers.iter().collect::<Vec<_>>().join(","), message: format!("expected header {}", TRAJECTORY_HEADER.join(",")) });
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |c: usize| -> Result<u64> {
            rec[c].parse().map_err(|e: std::num::ParseIntError| Error::Schema { row: row + 1, column: TRAJECTORY_HEADER[c].into(), message: e.to_string() })
        };
        let order = field(1)?;
        let cost = rec[6].parse().map_err(|e: std::num::ParseFloatError| Error::Schema { row: row + 1, column: "cost".into(), message: e.to_string() })?;
        out.push(PeriodOutcome {
            order_placed: order > 0,
            order,
            demand: field(2)?,
            urgent: field(3)?,
            expired: field(4)?,
            end_inventory: field(5)?,
            cost,
        });
    }
    Ok(out)
}
