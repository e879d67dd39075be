use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rbcplan_core::forecast::*;
use rbcplan_core::gbrt::GbrtConfig;
use rbcplan_core::timeseries::{stl_extend_with, StlConfig};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 1, 2).unwrap()
}

/// 80 + 0.01·i + weekly pattern + `coef`·A[i−7] + N(0, noise); the feature
/// column holds A lagged by seven days, so it is known before day i.
fn planted(n: usize, coef: f64, noise: f64, seed: u64, noise_features: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
    let week = [6.0, 4.0, 2.0, 0.0, -2.0, -5.0, -5.0];
    let mut names = vec!["a_lag7".to_string()];
    names.extend((0..noise_features).map(|j| format!("noise{j}")));
    let records = (0..n)
        .map(|i| {
            let lagged = if i >= 7 { Some(a[i - 7]) } else { None };
            let y = 80.0 + 0.01 * i as f64 + week[i % 7] + coef * lagged.unwrap_or(5.0) + noise * normal.sample(&mut rng);
            let mut features = vec![lagged];
            features.extend((0..noise_features).map(|_| Some(rng.gen_range(0.0..10.0))));
            DailyRecord { date: start() + Days::new(i as u64), demand: y.round().max(0.0) as u32, features }
        })
        .collect();
    Dataset::new(names, records).unwrap()
}

fn split(ds: &Dataset, n_train: usize) -> (Dataset, Dataset) {
    (ds.slice(0..n_train), ds.slice(n_train..ds.len()))
}

fn test_rmse(model: &HybridModel, test: &Dataset) -> f64 {
    rmse(&predict_daily(model, test).unwrap(), &test.demands()).unwrap()
}

#[test]
fn zero_residual_series_predicts_the_extension() {
    let week = [6u32, 4, 2, 0, 8, 1, 3];
    let records = (0..210)
        .map(|i| DailyRecord { date: start() + Days::new(i as u64), demand: 80 + week[i % 7], features: vec![Some((i % 3) as f64)] })
        .collect();
    let ds = Dataset::new(vec!["f".into()], records).unwrap();
    let (train, test) = split(&ds, 182);
    let model = fit_hybrid(&train, &StlConfig::default(), &GbrtConfig::default()).unwrap();
    let ext = stl_extend_with(&model.decomposition, test.len(), WEEKLY, model.stl_config.extension).unwrap();
    let pred = predict_daily(&model, &test).unwrap();
    for (p, e) in pred.iter().zip(&ext) {
        assert!((p - e).abs() <= 0.1, "{p} vs {e}");
    }
    for (p, y) in pred.iter().zip(test.demands()) {
        assert!((p - y).abs() < 1e-6);
    }
}

#[test]
fn planted_lag7_signal_beats_stl_alone() {
    let ds = planted(730 + 56, 5.0, 0.5, 3, 0);
    let (train, test) = split(&ds, 730);
    let stl = StlConfig::long_horizon();
    let hybrid = test_rmse(&fit_hybrid(&train, &stl, &GbrtConfig::default()).unwrap(), &test);
    let alone = test_rmse(&fit_stl_alone(&train, &stl).unwrap(), &test);
    assert!(hybrid < 0.6 * alone, "hybrid {hybrid} vs stl-alone {alone}");
}

#[test]
fn refit_is_bitwise_identical() {
    let ds = planted(400, 5.0, 0.5, 9, 3);
    let (train, test) = split(&ds, 364);
    let cfg = GbrtConfig { subsample_rows: 0.7, subsample_cols: 0.5, seed: 4, ..Default::default() };
    let a = predict_daily(&fit_hybrid(&train, &StlConfig::default(), &cfg).unwrap(), &test).unwrap();
    let b = predict_daily(&fit_hybrid(&train, &StlConfig::default(), &cfg).unwrap(), &test).unwrap();
    assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn hybrid_json_round_trip_predicts_identically() {
    let ds = planted(300, 5.0, 0.5, 1, 2);
    let (train, test) = split(&ds, 280);
    let model = fit_hybrid(&train, &StlConfig::default(), &GbrtConfig { n_rounds: 20, ..Default::default() }).unwrap();
    let back = HybridModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(predict_daily(&model, &test).unwrap(), predict_daily(&back, &test).unwrap());
}

#[test]
fn singleton_grid_returns_its_point() {
    let ds = planted(364, 5.0, 0.5, 5, 0);
    let stl = StlConfig::default();
    let gbrt = GbrtConfig { n_rounds: 10, ..Default::default() };
    let grid = ParamGrid::single(&stl, &gbrt).lattice(&stl, &gbrt);
    assert_eq!(grid.len(), 1);
    let out = grid_search_cv(&ds, &grid, 5).unwrap();
    assert_eq!(out.best_index, 0);
    assert_eq!(out.best, Candidate { stl, gbrt });
}

#[test]
fn grid_prefers_boosting_when_signal_is_planted() {
    let ds = planted(364, 5.0, 0.5, 5, 0);
    let stl = StlConfig::long_horizon();
    let gbrt = GbrtConfig::default();
    let grid = ParamGrid { n_rounds: vec![0, 100], ..ParamGrid::single(&stl, &gbrt) }.lattice(&stl, &gbrt);
    let out = grid_search_cv(&ds, &grid, 5).unwrap();
    assert_eq!(out.best.gbrt.n_rounds, 100);
    // The scores are the direct per-fold evaluation.
    assert_eq!(out.scores[0], cv_score(&ds, &grid[0], 5).unwrap());
    assert!(out.scores[1] < out.scores[0]);
}

#[test]
fn duplicated_lattice_entry_resolves_to_the_first() {
    let ds = planted(364, 5.0, 0.5, 5, 0);
    let stl = StlConfig::default();
    let worse = GbrtConfig { n_rounds: 1, ..Default::default() };
    let best = GbrtConfig { n_rounds: 30, ..Default::default() };
    let grid = vec![
        Candidate { stl: stl.clone(), gbrt: worse },
        Candidate { stl: stl.clone(), gbrt: best.clone() },
        Candidate { stl: stl.clone(), gbrt: best },
    ];
    let out = grid_search_cv(&ds, &grid, 5).unwrap();
    assert_eq!(out.scores[1], out.scores[2]);
    assert_eq!(out.best_index, 1);
}

#[test]
fn folds_shorter_than_two_cycles_are_rejected() {
    let ds = planted(60, 5.0, 0.5, 5, 0);
    let stl = StlConfig::default();
    let gbrt = GbrtConfig::default();
    assert!(grid_search_cv(&ds, &ParamGrid::single(&stl, &gbrt).lattice(&stl, &gbrt), 5).is_err());
    assert!(grid_search_cv(&ds, &[], 1).is_err());
}

#[test]
fn folds_are_contiguous_and_time_ordered() {
    let folds = time_folds(120, 5).unwrap();
    assert_eq!(folds.len(), 5);
    for (j, (fit, val)) in folds.iter().enumerate() {
        assert_eq!(fit.start, 0);
        assert_eq!(fit.end, val.start);
        assert_eq!(val.start, (j + 1) * 20);
    }
    assert_eq!(folds[4].1.end, 120);
}

#[test]
fn shifting_features_forward_never_helps() {
    let ds = planted(560, 5.0, 0.5, 11, 0);
    let mut shifted = ds.clone();
    for i in (0..shifted.records.len()).rev() {
        shifted.records[i].features = if i == 0 { vec![None] } else { ds.records[i - 1].features.clone() };
    }
    let stl = StlConfig::long_horizon();
    let c = Candidate { stl, gbrt: GbrtConfig::default() };
    let aligned = cv_score(&ds, &c, 5).unwrap();
    let late = cv_score(&shifted, &c, 5).unwrap();
    assert!(late >= aligned, "shifted {late} < aligned {aligned}");
}

#[test]
fn selection_keeps_the_exact_residual_feature() {
    let ds = planted(728, 5.0, 0.0, 21, 8);
    let out = iterative_feature_selection(&ds, &StlConfig::long_horizon(), &GbrtConfig::default(), &SelectionOptions::default()).unwrap();
    assert!(out.features.contains(&"a_lag7".to_string()), "{:?}", out.features);
    assert!(out.features.len() <= ds.feature_names.len());
    assert!(!out.rounds.is_empty());
}

#[test]
fn selection_with_a_tiny_threshold_keeps_the_used_set() {
    let ds = planted(364, 5.0, 0.5, 2, 2);
    let opts = SelectionOptions { importance_threshold: 1e-12, ..Default::default() };
    let out = iterative_feature_selection(&ds, &StlConfig::default(), &GbrtConfig::default(), &opts).unwrap();
    let used: Vec<String> = out.rounds[0].importance.iter().filter(|(_, v)| *v > 0.0).map(|(f, _)| f.clone()).collect();
    assert_eq!(out.rounds[0].features, ds.feature_names);
    if used == ds.feature_names {
        assert_eq!(out.rounds.len(), 1);
    } else {
        assert_eq!(out.rounds[1].features, used);
    }
}

#[test]
fn selection_with_one_feature_returns_it() {
    let ds = planted(364, 5.0, 0.5, 2, 0);
    let out = iterative_feature_selection(&ds, &StlConfig::default(), &GbrtConfig::default(), &SelectionOptions::default()).unwrap();
    assert_eq!(out.features, vec!["a_lag7".to_string()]);
}

#[test]
fn selection_rejects_bad_threshold() {
    let ds = planted(364, 5.0, 0.5, 2, 0);
    for t in [0.0, 1.0, -0.1] {
        let opts = SelectionOptions { importance_threshold: t, ..Default::default() };
        assert!(iterative_feature_selection(&ds, &StlConfig::default(), &GbrtConfig::default(), &opts).is_err());
    }
}

#[test]
fn semiweekly_scores_agree_both_ways() {
    let ds = planted(400, 5.0, 0.5, 8, 0);
    let (train, test) = split(&ds, 350);
    let pred = predict_daily(&fit_hybrid(&train, &StlConfig::default(), &GbrtConfig::default()).unwrap(), &test).unwrap();
    let dates = test.dates();
    let pairs = |v: &[f64]| dates.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    let p = aggregate_semiweekly(&pairs(&pred)).unwrap();
    let a = aggregate_semiweekly(&pairs(&test.demands())).unwrap();
    let via_aggregate = rmse(&p.iter().map(|x| x.1).collect::<Vec<_>>(), &a.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();

    // Independent: walk the days and sum blocks by weekday directly.
    let mut sums = Vec::new();
    let mut cur: Option<(f64, f64)> = None;
    let mut started = false;
    for (i, d) in dates.iter().enumerate() {
        let opens = matches!(d.weekday(), Weekday::Tue | Weekday::Fri);
        if opens {
            if let Some(c) = cur.take() {
                sums.push(c);
            }
            started = true;
            cur = Some((0.0, 0.0));
        }
        if started {
            let c = cur.as_mut().unwrap();
            c.0 += pred[i];
            c.1 += test.demands()[i];
        }
    }
    // The trailing block counts only when complete.
    let last = *dates.last().unwrap();
    if matches!(last.weekday(), Weekday::Thu | Weekday::Mon) {
        sums.extend(cur);
    }
    let direct = (sums.iter().map(|(p, a)| (p - a).powi(2)).sum::<f64>() / sums.len() as f64).sqrt();
    assert_eq!(sums.len(), p.len());
    assert!((via_aggregate - direct).abs() < 1e-9);
}

#[test]
fn forecast_report_csv_round_trip() {
    let ds = planted(300, 5.0, 0.5, 1, 0);
    let (train, test) = split(&ds, 280);
    let pred = predict_daily(&fit_stl_alone(&train, &StlConfig::default()).unwrap(), &test).unwrap();
    let rep = ForecastReport::new(&test.dates(), Some(&test.demands()), &pred).unwrap();
    assert!(rep.rmse.unwrap() >= 0.0 && rep.mape.unwrap() >= 0.0);
    let mut buf = Vec::new();
    write_forecast_csv(&rep, &mut buf).unwrap();
    assert_eq!(read_forecast_csv(buf.as_slice()).unwrap(), rep);
}
