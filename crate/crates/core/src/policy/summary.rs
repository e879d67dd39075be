use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use super::{LearnedPolicy, PolicyParams, Scenario, Schedule};
use crate::error::{param, Result};
use crate::inventory::{CostParams, Simulation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (n − 1); 0 for a single value.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(Self { mean, sd })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// Order exactly the realised demand.
    Gold,
    /// Raise stock to a fixed level every day. Urgent deliveries are not
    /// costed, matching records that never captured them.
    Baseline { target: u64 },
    /// Forecast-driven ordering with a target and reorder level.
    Proposed(PolicyParams),
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Gold => "gold",
            Strategy::Baseline { .. } => "baseline",
            Strategy::Proposed(p) => match p.schedule {
                Schedule::Daily => "daily",
                Schedule::Semiweekly => "semiweekly",
            },
        }
    }

    /// Resolve a label; the proposed strategies need a learned policy.
    pub fn from_label(label: &str, baseline_target: u64, learned: Option<&LearnedPolicy>) -> Result<Self> {
        let need = |s: Schedule| match learned {
            Some(l) => Ok(Strategy::Proposed(l.params(s))),
            None => param(format!("strategy '{label}' needs a learned policy")),
        };
        match label {
            "gold" => Ok(Strategy::Gold),
            "baseline" => Ok(Strategy::Baseline { target: baseline_target }),
            "daily" => need(Schedule::Daily),
            "semiweekly" => need(Schedule::Semiweekly),
            other => param(format!("unknown strategy '{other}' (expected gold, baseline, daily or semiweekly)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub label: String,
    pub periods: usize,
    pub days_with_orders: usize,
    pub order_day_fraction: Option<f64>,
    /// Over days with an order only.
    pub order_quantity: Option<MeanSd>,
    pub inventory: Option<MeanSd>,
    /// `None` when the strategy does not account for urgent deliveries.
    pub urgent: Option<MeanSd>,
    pub wastage: Option<MeanSd>,
    pub cost: Option<MeanSd>,
    pub total_cost: f64,
    /// Mean inventory over mean demand.
    pub days_on_hand: Option<f64>,
}

/// Summary statistics of a finished run.
pub fn summarize(label: &str, sim: &Simulation, urgent_tracked: bool) -> StrategySummary {
    let o = &sim.outcomes;
    let col = |f: &dyn Fn(&crate::inventory::PeriodOutcome) -> f64| o.iter().map(f).collect::<Vec<f64>>();
    let orders: Vec<f64> = o.iter().filter(|p| p.order_placed).map(|p| p.order as f64).collect();
    let inventory = MeanSd::of(&col(&|p| p.end_inventory as f64));
    let demand = MeanSd::of(&col(&|p| p.demand as f64));
    StrategySummary {
        label: label.to_string(),
        periods: o.len(),
        days_with_orders: orders.len(),
        order_day_fraction: (!o.is_empty()).then(|| orders.len() as f64 / o.len() as f64),
        order_quantity: MeanSd::of(&orders),
        inventory,
        urgent: if urgent_tracked { MeanSd::of(&col(&|p| p.urgent as f64)) } else { None },
        wastage: MeanSd::of(&col(&|p| p.expired as f64)),
        cost: MeanSd::of(&col(&|p| p.cost)),
        total_cost: o.iter().map(|p| p.cost).sum(),
        days_on_hand: match (inventory, demand) {
            (Some(i), Some(d)) if d.mean > 0.0 => Some(i.mean / d.mean),
            _ => None,
        },
    }
}

/// Run one strategy over the scenario and summarise it.
pub fn evaluate_strategy(strategy: &Strategy, scenario: &Scenario) -> Result<(StrategySummary, Simulation)> {
    let (sim, urgent_tracked) = match strategy {
        Strategy::Gold => (scenario.simulate_gold(), true),
        Strategy::Baseline { target } => {
            let costs = CostParams { urgent: 0.0, ..scenario.costs };
            (scenario.simulate_order_up_to(*target, &costs), false)
        }
        Strategy::Proposed(p) => (scenario.simulate_policy(p)?, true),
    };
    Ok((summarize(strategy.label(), &sim, urgent_tracked), sim))
}

fn fmt_ms(v: Option<MeanSd>) -> String {
    v.map(|m| format!("{:.2} ({:.2})", m.mean, m.sd)).unwrap_or_else(|| "N/A".into())
}

fn rows(summaries: &[StrategySummary]) -> Vec<(String, Vec<String>)> {
    let base_total = summaries.iter().find(|s| s.label == "baseline").map(|s| s.total_cost);
    let mut rows = vec![
        (
            "days with orders".to_string(),
            summaries
                .iter()
                .map(|s| match s.order_day_fraction {
                    Some(f) => format!("{} ({:.2}%)", s.days_with_orders, 100.0 * f),
                    None => "0".into(),
                })
                .collect(),
        ),
        ("order quantity on order days".into(), summaries.iter().map(|s| fmt_ms(s.order_quantity)).collect()),
        ("inventory level".into(), summaries.iter().map(|s| fmt_ms(s.inventory)).collect()),
        ("urgent units".into(), summaries.iter().map(|s| fmt_ms(s.urgent)).collect()),
        ("wasted units".into(), summaries.iter().map(|s| fmt_ms(s.wastage)).collect()),
        ("cost".into(), summaries.iter().map(|s| fmt_ms(s.cost)).collect()),
        ("total cost".into(), summaries.iter().map(|s| format!("{:.0}", s.total_cost)).collect()),
    ];
    if let Some(b) = base_total.filter(|b| *b > 0.0) {
        rows.push((
            "total cost (% of baseline)".into(),
            summaries.iter().map(|s| format!("{:.2}%", 100.0 * s.total_cost / b)).collect(),
        ));
    }
    rows.push((
        "days of inventory on hand".into(),
        summaries.iter().map(|s| s.days_on_hand.map(|d| format!("{d:.2}")).unwrap_or_else(|| "N/A".into())).collect(),
    ));
    rows
}

/// One row per summary field, one column per strategy, padded for reading.
pub fn comparison_text(summaries: &[StrategySummary]) -> String {
    let rows = rows(summaries);
    let first = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("summary".len());
    let widths: Vec<usize> = summaries
        .iter()
        .enumerate()
        .map(|(j, s)| rows.iter().map(|r| r.1[j].len()).max().unwrap_or(0).max(s.label.len()))
        .collect();
    let mut out = String::new();
    let _ = write!(out, "{:<first$}", "summary");
    for (s, w) in summaries.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", s.label);
    }
    out.push('\n');
    for (name, cells) in &rows {
        let _ = write!(out, "{name:<first$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    }
    out
}

/// Same table as CSV with raw numbers; unavailable values are empty cells.
pub fn comparison_csv<W: io::Write>(summaries: &[StrategySummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["metric".to_string()];
    header.extend(summaries.iter().map(|s| s.label.clone()));
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    type Field = fn(&StrategySummary) -> Option<f64>;
    let fields: [(&str, Field); 15] = [
        ("periods", |s| Some(s.periods as f64)),
        ("days_with_orders", |s| Some(s.days_with_orders as f64)),
        ("order_day_fraction", |s| s.order_day_fraction),
        ("order_quantity_mean", |s| s.order_quantity.map(|m| m.mean)),
        ("order_quantity_sd", |s| s.order_quantity.map(|m| m.sd)),
        ("inventory_mean", |s| s.inventory.map(|m| m.mean)),
        ("inventory_sd", |s| s.inventory.map(|m| m.sd)),
        ("urgent_mean", |s| s.urgent.map(|m| m.mean)),
        ("urgent_sd", |s| s.urgent.map(|m| m.sd)),
        ("wastage_mean", |s| s.wastage.map(|m| m.mean)),
        ("wastage_sd", |s| s.wastage.map(|m| m.sd)),
        ("cost_mean", |s| s.cost.map(|m| m.mean)),
        ("cost_sd", |s| s.cost.map(|m| m.sd)),
        ("total_cost", |s| Some(s.total_cost)),
        ("days_on_hand", |s| s.days_on_hand),
    ];
    for (name, f) in fields {
        let mut row = vec![name.to_string()];
        row.extend(summaries.iter().map(|s| opt(f(s))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
