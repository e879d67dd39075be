//! Subcommand bodies. Each one opens a run directory, writes its artifacts
//! there and marks the manifest finished or failed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use rbcplan_core::datagen::{generate, write_truth_csv};
use rbcplan_core::forecast::{
    clamp_nonnegative, fit_hybrid, fit_stl_alone, fit_stl_linear, grid_search_cv, iterative_feature_selection,
    predict_daily, write_forecast_csv, Dataset, ForecastReport, HybridModel,
};
use rbcplan_core::gbrt::variable_importance;
use rbcplan_core::inventory::{simulate, write_trajectory_csv};
use rbcplan_core::policy::{
    calibrate, comparison_csv, comparison_text, compare_strategies, summarize, LearnedPolicy, Sweep,
};
use rbcplan_core::timeseries::{stl_decompose, write_decomposition_csv};
use rbcplan_core::forecast::{mape, rmse, ResidualModel, WEEKLY};

use crate::config::RunConfig;
use crate::run::Run;
use crate::{Cli, Command, StlArgs};

/// Stable error category for the JSON error line.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    use rbcplan_core::Error as E;
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<E>() {
            return match core {
                E::Parameter(_) => "parameter",
                E::LengthMismatch { .. } => "length_mismatch",
                E::Schema { .. } => "schema",
                E::Io(_) => "io",
                E::Csv(_) => "csv",
                E::Json(_) => "json",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
        if cause.downcast_ref::<toml::de::Error>().is_some() {
            return "config";
        }
    }
    "error"
}

pub fn execute(cli: &Cli) -> Result<PathBuf> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    let inputs = apply_flags(&cli.command, &mut cfg);
    cfg.validate()?;
    let (name, inputs): (&str, Vec<&Path>) = (command_name(&cli.command), inputs);
    let mut run = Run::start(&cli.out_root, cli.run_dir.as_deref(), name, &inputs, &cfg)?;
    let result = match &cli.command {
        Command::Generate(_) => cmd_generate(&mut run, &cfg),
        Command::Decompose(a) => cmd_decompose(&mut run, &cfg, &a.input),
        Command::Train(a) => cmd_train(&mut run, &cfg, &a.input),
        Command::Forecast(a) => cmd_forecast(&mut run, &a.model, &a.input, a.horizon),
        Command::Simulate(a) => cmd_simulate(&mut run, &cfg, &a.orders, &a.demands),
        Command::Optimize(a) => cmd_optimize(&mut run, &cfg, &a.model, &a.input),
        Command::Compare(a) => cmd_compare(&mut run, &cfg, a),
    };
    match result {
        Ok(()) => run.finish(),
        Err(e) => {
            run.fail(&format!("{e:#}"));
            Err(e)
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate(_) => "generate",
        Command::Decompose(_) => "decompose",
        Command::Train(_) => "train",
        Command::Forecast(_) => "forecast",
        Command::Simulate(_) => "simulate",
        Command::Optimize(_) => "optimize",
        Command::Compare(_) => "compare",
    }
}

fn apply_stl(a: &StlArgs, cfg: &mut RunConfig) {
    if let Some(v) = a.s_window {
        cfg.stl.s_window = v;
    }
    if let Some(v) = a.t_window {
        cfg.stl.t_window = Some(v);
    }
    if let Some(v) = a.n_outer {
        cfg.stl.n_outer = v;
    }
    if let Some(v) = a.extension {
        cfg.stl.extension = v;
    }
}

/// Fold command-line overrides into `cfg`; returns the input files to hash.
fn apply_flags<'a>(c: &'a Command, cfg: &mut RunConfig) -> Vec<&'a Path> {
    match c {
        Command::Generate(a) => {
            let g = &mut cfg.generate;
            g.n_days = a.days.unwrap_or(g.n_days);
            g.seed = a.seed.unwrap_or(g.seed);
            g.start_date = a.start.unwrap_or(g.start_date);
            g.noise_sd = a.noise_sd.unwrap_or(g.noise_sd);
            vec![]
        }
        Command::Decompose(a) => {
            apply_stl(&a.stl, cfg);
            vec![&a.input]
        }
        Command::Train(a) => {
            apply_stl(&a.stl, cfg);
            let t = &mut cfg.train;
            t.test_days = a.test_days.unwrap_or(t.test_days);
            t.select_features |= a.select;
            t.cv_folds = a.cv_folds.unwrap_or(t.cv_folds);
            let g = &mut cfg.gbrt;
            g.n_rounds = a.n_rounds.unwrap_or(g.n_rounds);
            g.learning_rate = a.learning_rate.unwrap_or(g.learning_rate);
            g.max_depth = a.max_depth.unwrap_or(g.max_depth);
            g.seed = a.seed.unwrap_or(g.seed);
            vec![&a.input]
        }
        Command::Forecast(a) => vec![&a.model, &a.input],
        Command::Simulate(a) => {
            cfg.plan.initial_stock = a.initial_stock.unwrap_or(cfg.plan.initial_stock);
            cfg.plan.shelf_life = a.shelf_life.unwrap_or(cfg.plan.shelf_life);
            vec![&a.orders, &a.demands]
        }
        Command::Optimize(a) => {
            cfg.plan.initial_stock = a.initial_stock.unwrap_or(cfg.plan.initial_stock);
            vec![&a.model, &a.input]
        }
        Command::Compare(a) => {
            cfg.plan.initial_stock = a.initial_stock.unwrap_or(cfg.plan.initial_stock);
            if a.baseline_target.is_some() {
                cfg.plan.baseline_target = a.baseline_target;
            }
            let mut v: Vec<&Path> = vec![&a.model, &a.input];
            v.extend(a.policy.as_deref());
            v
        }
    }
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(f).with_context(|| format!("reading dataset {}", path.display()))
}

fn read_model(path: &Path) -> Result<HybridModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    HybridModel::from_json(&text).with_context(|| format!("loading model {}", path.display()))
}

/// The model's training rows and every row after them.
fn split_for_model(data: &Dataset, model: &HybridModel) -> Result<(Dataset, Dataset)> {
    let from = data.position_after(model.train_start - chrono::Days::new(1));
    let to = data.position_after(model.train_end);
    let train = data.slice(from..to);
    if train.start_date() != Some(model.train_start) || train.len() != model.decomposition.len() {
        bail!(
            "input does not contain the model's training window {}..={}",
            model.train_start,
            model.train_end
        );
    }
    Ok((train, data.slice(to..data.len())))
}

fn cmd_generate(run: &mut Run, cfg: &RunConfig) -> Result<()> {
    let g = generate(&cfg.generate)?;
    run.artifact("dataset.csv", |w| Ok(g.dataset.write_csv(w)?))?;
    run.artifact("truth.csv", |w| Ok(write_truth_csv(&g.truth, w)?))?;
    println!(
        "generated {} days from {} with {} features (seed {})",
        g.dataset.len(),
        cfg.generate.start_date,
        g.dataset.feature_names.len(),
        cfg.generate.seed
    );
    Ok(())
}

fn cmd_decompose(run: &mut Run, cfg: &RunConfig, input: &Path) -> Result<()> {
    let data = read_dataset(input)?;
    let series = data.demand_series(WEEKLY)?;
    let dec = stl_decompose(&series, &cfg.stl)?;
    run.artifact("decomposition.csv", |w| Ok(write_decomposition_csv(&series, &dec, w)?))?;
    println!("decomposed {} days (period {WEEKLY})", series.len());
    Ok(())
}

#[derive(Serialize)]
struct FitMetrics {
    rmse: f64,
    /// Percent; absent when some actual demand is zero.
    mape_percent: Option<f64>,
}

impl FitMetrics {
    fn of(pred: &[f64], actual: &[f64]) -> Result<Self> {
        Ok(Self { rmse: rmse(pred, actual)?, mape_percent: mape(pred, actual).ok().map(|m| 100.0 * m) })
    }
}

#[derive(Serialize)]
struct TrainMetrics {
    train_days: usize,
    test_days: usize,
    features: Vec<String>,
    train: FitMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<FitMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_stl_alone: Option<FitMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_stl_linear: Option<FitMetrics>,
}

fn cmd_train(run: &mut Run, cfg: &RunConfig, input: &Path) -> Result<()> {
    let data = read_dataset(input)?;
    let opts = &cfg.train;
    if opts.test_days >= data.len() {
        bail!("test_days {} leaves no training data in {} rows", opts.test_days, data.len());
    }
    let split = data.len() - opts.test_days;
    let mut train = data.slice(0..split);
    let mut test = data.slice(split..data.len());
    let (mut stl, mut gbrt) = (cfg.stl.clone(), cfg.gbrt.clone());

    if let Some(spec) = &opts.grid {
        let lattice = spec.lattice(&stl, &gbrt);
        let cv = grid_search_cv(&train, &lattice, opts.cv_folds)?;
        run.artifact("cv.csv", |w| {
            writeln!(w, "index,s_window,t_window,n_rounds,learning_rate,max_depth,min_child_weight,subsample_rows,subsample_cols,lambda,cv_rmse")?;
            for (i, (c, s)) in lattice.iter().zip(&cv.scores).enumerate() {
                let tw = c.stl.t_window.map(|t| t.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{i},{},{tw},{},{},{},{},{},{},{},{s}",
                    c.stl.s_window,
                    c.gbrt.n_rounds,
                    c.gbrt.learning_rate,
                    c.gbrt.max_depth,
                    c.gbrt.min_child_weight,
                    c.gbrt.subsample_rows,
                    c.gbrt.subsample_cols,
                    c.gbrt.lambda
                )?;
            }
            Ok(())
        })?;
        println!("grid search: {} points, best #{} cv rmse {:.3}", lattice.len(), cv.best_index, cv.scores[cv.best_index]);
        stl = cv.best.stl;
        gbrt = cv.best.gbrt;
    }

    if opts.select_features {
        let sel = iterative_feature_selection(&train, &stl, &gbrt, &opts.selection)?;
        run.artifact("selection.csv", |w| {
            writeln!(w, "round,holdout_rmse,n_features,features")?;
            for (i, r) in sel.rounds.iter().enumerate() {
                writeln!(w, "{},{},{},{}", i + 1, r.holdout_rmse, r.features.len(), r.features.join(";"))?;
            }
            Ok(())
        })?;
        println!("feature selection kept {} of {}: {}", sel.features.len(), train.feature_names.len(), sel.features.join(", "));
        train = train.select(&sel.features)?;
        test = test.select(&sel.features)?;
    }

    let model = fit_hybrid(&train, &stl, &gbrt)?;
    run.artifact("model.json", |w| {
        w.write_all(model.to_json()?.as_bytes())?;
        writeln!(w)?;
        Ok(())
    })?;
    if let ResidualModel::Boosted(e) = &model.residual_model {
        let mut imp: Vec<(String, f64)> = variable_importance(e).into_iter().collect();
        imp.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        run.artifact("importance.csv", |w| {
            writeln!(w, "feature,importance")?;
            for (f, v) in &imp {
                writeln!(w, "{f},{v}")?;
            }
            Ok(())
        })?;
    }

    let train_fit = FitMetrics::of(&model.fitted(&train)?, &train.demands())?;
    let mut metrics = TrainMetrics {
        train_days: train.len(),
        test_days: test.len(),
        features: model.feature_names.clone(),
        train: train_fit,
        test: None,
        test_stl_alone: None,
        test_stl_linear: None,
    };
    println!("trained on {} days; in-sample rmse {:.3}", train.len(), metrics.train.rmse);
    if !test.is_empty() {
        let actual = test.demands();
        let hyb = clamp_nonnegative(&predict_daily(&model, &test)?);
        let alone = clamp_nonnegative(&predict_daily(&fit_stl_alone(&train, &stl)?, &test)?);
        let lin = clamp_nonnegative(&predict_daily(&fit_stl_linear(&train, &stl)?, &test)?);
        metrics.test = Some(FitMetrics::of(&hyb, &actual)?);
        metrics.test_stl_alone = Some(FitMetrics::of(&alone, &actual)?);
        metrics.test_stl_linear = Some(FitMetrics::of(&lin, &actual)?);
        for (name, m) in [("hybrid", &metrics.test), ("stl+linear", &metrics.test_stl_linear), ("stl alone", &metrics.test_stl_alone)] {
            let m = m.as_ref().expect("set above");
            let mape = m.mape_percent.map_or("N/A".to_string(), |p| format!("{p:.2}%"));
            println!("test {name:<11} rmse {:>8.3}  mape {mape}", m.rmse);
        }
    }
    run.json_artifact("metrics.json", &metrics)?;
    Ok(())
}

fn cmd_forecast(run: &mut Run, model_path: &Path, input: &Path, horizon: Option<usize>) -> Result<()> {
    let model = read_model(model_path)?;
    let data = read_dataset(input)?.select(&model.feature_names)?;
    let after = data.slice(data.position_after(model.train_end)..data.len());
    let h = horizon.unwrap_or(after.len());
    if h > after.len() {
        bail!("horizon {h} exceeds the {} rows available after {}", after.len(), model.train_end);
    }
    let future = after.slice(0..h);
    let pred = clamp_nonnegative(&predict_daily(&model, &future)?);
    let actual = future.demands();
    let report = ForecastReport::new(&future.dates(), Some(&actual), &pred)?;
    run.artifact("forecast.csv", |w| Ok(write_forecast_csv(&report, w)?))?;
    #[derive(Serialize)]
    struct M {
        horizon: usize,
        rmse: Option<f64>,
        mape_percent: Option<f64>,
    }
    let m = M { horizon: h, rmse: report.rmse, mape_percent: report.mape.map(|v| 100.0 * v) };
    run.json_artifact("metrics.json", &m)?;
    match report.rmse {
        Some(r) => println!("forecast {h} days; rmse {r:.3}"),
        None => println!("forecast {h} days"),
    }
    Ok(())
}

/// One unsigned column: the one named `name`, else the only column.
fn read_column(path: &Path, name: &str) -> Result<Vec<u64>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = match headers.iter().position(|h| h.trim() == name) {
        Some(c) => c,
        None if headers.len() == 1 => 0,
        None => bail!("{} has no '{name}' column", path.display()),
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(col).unwrap_or("").trim();
        let v = cell.parse::<u64>().map_err(|_| rbcplan_core::Error::Schema {
            row: i + 1,
            column: headers[col].to_string(),
            message: format!("'{cell}' is not a non-negative integer"),
        });
        out.push(v.with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(out)
}

fn cmd_simulate(run: &mut Run, cfg: &RunConfig, orders: &Path, demands: &Path) -> Result<()> {
    let z = read_column(orders, "order")?;
    let y = read_column(demands, "demand")?;
    if z.len() != y.len() {
        return Err(anyhow!(rbcplan_core::Error::LengthMismatch { what: "orders vs demands", left: z.len(), right: y.len() }))
            .with_context(|| format!("{} has {} rows but {} has {}", orders.display(), z.len(), demands.display(), y.len()));
    }
    let mean = if y.is_empty() { 1.0 } else { y.iter().sum::<u64>() as f64 / y.len() as f64 };
    let initial = cfg.plan.initial_profile(mean)?;
    let sim = simulate(&initial, &z, &y, &cfg.plan.costs)?;
    run.artifact("trajectory.csv", |w| Ok(write_trajectory_csv(&sim.outcomes, w)?))?;
    let summary = summarize("simulated", &sim, true);
    run.json_artifact("summary.json", &summary)?;
    println!("simulated {} periods; average cost {:.3}", sim.outcomes.len(), sim.average_cost);
    Ok(())
}

fn write_sweep(run: &mut Run, name: &str, column: &str, s: &Sweep) -> Result<()> {
    run.artifact(name, |w| {
        writeln!(w, "{column},average_cost,objective,selected")?;
        for (i, ((c, a), o)) in s.candidates.iter().zip(&s.average_cost).zip(&s.objective).enumerate() {
            writeln!(w, "{c},{a},{o},{}", u8::from(i == s.best_index))?;
        }
        Ok(())
    })?;
    Ok(())
}

fn learn(run: &mut Run, cfg: &RunConfig, model: &HybridModel, train: &Dataset) -> Result<LearnedPolicy> {
    let learned = calibrate(model, train, &cfg.plan)?;
    run.json_artifact("policy.json", &learned)?;
    write_sweep(run, "sweep_target.csv", "target", &learned.target_sweep)?;
    write_sweep(run, "sweep_reorder_daily.csv", "reorder", &learned.daily_sweep)?;
    write_sweep(run, "sweep_reorder_semiweekly.csv", "reorder", &learned.semiweekly_sweep)?;
    println!(
        "learned target S*={} reorder s*: daily {} semiweekly {}",
        learned.target, learned.reorder_daily, learned.reorder_semiweekly
    );
    Ok(learned)
}

fn cmd_optimize(run: &mut Run, cfg: &RunConfig, model_path: &Path, input: &Path) -> Result<()> {
    let model = read_model(model_path)?;
    let data = read_dataset(input)?.select(&model.feature_names)?;
    let (train, _) = split_for_model(&data, &model)?;
    learn(run, cfg, &model, &train)?;
    Ok(())
}

fn cmd_compare(run: &mut Run, cfg: &RunConfig, a: &crate::CompareArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let data = read_dataset(&a.input)?.select(&model.feature_names)?;
    let (train, after) = split_for_model(&data, &model)?;
    let h = a.horizon.unwrap_or(after.len());
    if h > after.len() {
        bail!("horizon {h} exceeds the {} rows available after {}", after.len(), model.train_end);
    }
    let test = after.slice(0..h);
    let learned = match &a.policy {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let l: LearnedPolicy = serde_json::from_str(&text).with_context(|| format!("loading policy {}", p.display()))?;
            run.json_artifact("policy.json", &l)?;
            l
        }
        None => learn(run, cfg, &model, &train)?,
    };
    let out = compare_strategies(&model, &train, &test, learned, &cfg.plan)?;
    let actual = test.demands();
    let report = ForecastReport::new(&test.dates(), Some(&actual), &out.forecast)?;
    run.artifact("forecast.csv", |w| Ok(write_forecast_csv(&report, w)?))?;
    for (s, sim) in out.summaries.iter().zip(&out.simulations) {
        run.artifact(&format!("trajectory_{}.csv", s.label), |w| Ok(write_trajectory_csv(&sim.outcomes, w)?))?;
    }
    run.artifact("comparison.csv", |w| Ok(comparison_csv(&out.summaries, w)?))?;
    let text = comparison_text(&out.summaries);
    run.artifact("comparison.txt", |w| Ok(w.write_all(text.as_bytes())?))?;
    print!("{text}");
    Ok(())
}
