use crate::error::{check_len, param, Result};

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_len("predictions vs actuals", pred.len(), actual.len())?;
    if pred.is_empty() {
        return param("rmse of an empty series is undefined");
    }
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Mean absolute percentage error as a fraction (0.1 = 10%).
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_len("predictions vs actuals", pred.len(), actual.len())?;
    if pred.is_empty() {
        return param("mape of an empty series is undefined");
    }
    if let Some(i) = actual.iter().position(|a| *a == 0.0) {
        return param(format!("mape undefined: actual value at index {i} is zero"));
    }
    Ok(pred.iter().zip(actual).map(|(p, a)| ((p - a) / a).abs()).sum::<f64>() / pred.len() as f64)
}

/// Pearson correlation of `x[t]` with `y[t - lag]` over the overlapping range.
pub fn lagged_cross_correlation(x: &[f64], y: &[f64], lag: i64) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = (0..x.len() as i64)
        .filter_map(|t| {
            let s = t - lag;
            (s >= 0 && (s as usize) < y.len()).then(|| (x[t as usize], y[s as usize]))
        })
        .collect();
    if pairs.len() < 3 {
        return param(format!("only {} overlapping points at lag {lag}; need 3", pairs.len()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return param("cross-correlation undefined for a constant series");
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[3.0], &[1.0]).unwrap(), 2.0);
        assert_eq!(mape(&[3.0], &[1.0]).unwrap(), 2.0);
        assert!((rmse(&[90.0, 110.0], &[100.0, 100.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!((mape(&[90.0, 110.0], &[100.0, 100.0]).unwrap() - 0.10).abs() < 1e-12);
        let err = mape(&[1.0, 2.0], &[1.0, 0.0]).unwrap_err().to_string();
        assert!(err.contains("index 1"), "{err}");
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn cross_correlation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..200).map(|_| rng.gen()).collect();
        // y leads x by seven days, so x[t] pairs with y[t - 7]
        let y: Vec<f64> = (0..200).map(|t| if t + 7 < 200 { x[t + 7] } else { 0.5 }).collect();
        assert!((lagged_cross_correlation(&x, &y, 7).unwrap() - 1.0).abs() < 1e-9);
        assert!((lagged_cross_correlation(&x, &x, 0).unwrap() - 1.0).abs() < 1e-12);
        let a: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        for lag in 0..=7 {
            assert!(lagged_cross_correlation(&a, &b, lag).unwrap().abs() < 0.1);
        }
        assert!(lagged_cross_correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 1).is_err());
        assert!(lagged_cross_correlation(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn metrics_permutation_invariant(pairs in prop::collection::vec((1.0f64..500.0, 1.0f64..500.0), 1..50), seed in any::<u64>()) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..pairs.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..idx.len()).rev() { idx.swap(i, rng.gen_range(0..=i)); }
            let p2: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            let a2: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
            prop_assert!((rmse(&p, &a).unwrap() - rmse(&p2, &a2).unwrap()).abs() < 1e-9);
            prop_assert!((mape(&p, &a).unwrap() - mape(&p2, &a2).unwrap()).abs() < 1e-9);
        }
    }
}
