//! `rbcplan`: generate data, fit the hybrid forecaster, learn ordering levels
//! and compare ordering strategies. Every run writes to its own directory.

mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::parse_extension;
use rbcplan_core::timeseries::Extension;

#[derive(Debug, Parser)]
#[command(name = "rbcplan", version, about = "Demand forecasting and ordering for perishable blood stock")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root under which timestamped run directories are created.
    #[arg(long, global = true, env = "RBCPLAN_OUT", default_value = "runs")]
    pub out_root: PathBuf,
    /// Write into exactly this directory instead of a new timestamped one.
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset and its ground truth.
    Generate(GenerateArgs),
    /// Split a demand series into trend, seasonal and residual.
    Decompose(DecomposeArgs),
    /// Fit the hybrid model on all but the trailing test days.
    Train(TrainArgs),
    /// Forecast the days after a model's training window.
    Forecast(ForecastArgs),
    /// Run explicit order and demand streams through the inventory.
    Simulate(SimulateArgs),
    /// Learn the inventory target and reorder levels for a model.
    Optimize(OptimizeArgs),
    /// Compare baseline, gold-standard, daily and semiweekly ordering.
    Compare(CompareArgs),
}

#[derive(Debug, Args, Default)]
pub struct StlArgs {
    #[arg(long)]
    pub s_window: Option<usize>,
    #[arg(long)]
    pub t_window: Option<usize>,
    #[arg(long)]
    pub n_outer: Option<usize>,
    /// Trend extension: cycle, full, flat, drift:<n> or mean:<n>.
    #[arg(long, value_parser = parse_extension)]
    pub extension: Option<Extension>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// First date, YYYY-MM-DD.
    #[arg(long)]
    pub start: Option<chrono::NaiveDate>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub stl: StlArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Trailing days held out for testing.
    #[arg(long)]
    pub test_days: Option<usize>,
    /// Run importance-driven feature selection before the final fit.
    #[arg(long)]
    pub select: bool,
    /// Folds for the grid search (needs a `[train.grid]` table).
    #[arg(long)]
    pub cv_folds: Option<usize>,
    #[arg(long)]
    pub n_rounds: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Seed for row and column subsampling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub stl: StlArgs,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset covering the days to forecast (extra rows are ignored).
    #[arg(long)]
    pub input: PathBuf,
    /// Days to forecast; defaults to every row after training.
    #[arg(long)]
    pub horizon: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// CSV with an `order` column (or a single column).
    #[arg(long)]
    pub orders: PathBuf,
    /// CSV with a `demand` column (or a single column).
    #[arg(long)]
    pub demands: PathBuf,
    #[arg(long)]
    pub initial_stock: Option<u64>,
    #[arg(long)]
    pub shelf_life: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset containing the model's training window.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub initial_stock: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset containing the training window and the days to evaluate.
    #[arg(long)]
    pub input: PathBuf,
    /// Learned levels from `optimize`; learned afresh when omitted.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub baseline_target: Option<u64>,
    #[arg(long)]
    pub initial_stock: Option<u64>,
}

/// One line on stderr that scripts can parse.
fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "status": "error", "kind": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            report_error("usage", first.trim_start_matches("error: ").trim());
            return ExitCode::from(2);
        }
    };
    match commands::execute(&cli) {
        Ok(dir) => {
            println!("run_dir={}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = format!("{e:#}").replace('\n', " ");
            report_error(commands::error_kind(&e), message.trim());
            ExitCode::FAILURE
        }
    }
}
