//! Additive seasonal-trend decomposition by loess.

use std::io;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use super::loess::{bisquare, fit_at};
use crate::error::{param, Error, Result};

/// A daily series with a known seasonal cycle length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub start_date: NaiveDate,
    pub values: Vec<f64>,
    /// Observations per seasonal cycle (7 for day-of-week).
    pub period: usize,
}

impl Series {
    pub fn new(start_date: NaiveDate, values: Vec<f64>, period: usize) -> Result<Self> {
        if values.is_empty() {
            return param("series is empty");
        }
        if period < 2 {
            return param(format!("period must be at least 2, got {period}"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return param(format!("series value at index {i} is missing or not finite"));
        }
        Ok(Self { start_date, values, period })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn date(&self, i: usize) -> NaiveDate {
        self.start_date + Days::new(i as u64)
    }
}

/// How trend + seasonal are projected past the end of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "window")]
pub enum Extension {
    /// Linear drift fitted to the last `period` trend values.
    #[default]
    CycleDrift,
    /// Linear drift fitted to the last `n` trend values.
    WindowDrift(usize),
    /// Linear drift fitted to the whole trend.
    FullDrift,
    /// Hold the last trend value.
    Flat,
    /// Hold the mean of the last `n` trend values.
    WindowMean(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StlConfig {
    /// Seasonal smoothing window, in cycles. Odd, at least 7.
    pub s_window: usize,
    /// Trend smoothing window in observations; `None` picks the usual default.
    pub t_window: Option<usize>,
    pub n_inner: usize,
    /// Robustness iterations.
    pub n_outer: usize,
    pub loess_degree: u8,
    #[serde(default)]
    pub extension: Extension,
}

impl Default for StlConfig {
    fn default() -> Self {
        Self { s_window: 7, t_window: None, n_inner: 2, n_outer: 1, loess_degree: 1, extension: Extension::CycleDrift }
    }
}

impl StlConfig {
    /// Smoother settings for horizons of weeks to months: a stable seasonal
    /// pattern, a slow trend, and drift estimated over the whole history.
    pub fn long_horizon() -> Self {
        Self { s_window: 35, t_window: Some(91), extension: Extension::FullDrift, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_window < 7 || self.s_window.is_multiple_of(2) {
            return param(format!("s_window must be odd and at least 7, got {}", self.s_window));
        }
        if let Some(t) = self.t_window {
            if t < 3 || t % 2 == 0 {
                return param(format!("t_window must be odd and at least 3, got {t}"));
            }
        }
        if self.n_inner == 0 {
            return param("n_inner must be positive");
        }
        if self.loess_degree > 2 {
            return param(format!("loess_degree must be 0, 1 or 2, got {}", self.loess_degree));
        }
        match self.extension {
            Extension::WindowDrift(w) if w < 2 => return param("drift window must cover at least 2 points"),
            Extension::WindowMean(0) => return param("mean window must cover at least 1 point"),
            _ => {}
        }
        Ok(())
    }

    /// Trend window actually used for a given period.
    pub fn resolved_t_window(&self, period: usize) -> usize {
        self.t_window.unwrap_or_else(|| {
            let raw = (1.5 * period as f64 / (1.0 - 1.5 / self.s_window as f64)).ceil() as usize;
            next_odd(raw)
        })
    }
}

fn next_odd(x: usize) -> usize {
    if x.is_multiple_of(2) { x + 1 } else { x }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub residual: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.trend.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trend.is_empty()
    }

    /// trend + seasonal at each observation.
    pub fn fitted(&self) -> Vec<f64> {
        self.trend.iter().zip(&self.seasonal).map(|(t, s)| t + s).collect()
    }
}

/// Decompose `series` into trend, seasonal and residual.
///
/// The residual is `y - trend - seasonal` so the three parts reconstruct the
/// input up to round-off. With `n_outer > 0` each outer pass reweights
/// observations by the bisquare of their scaled residual.
pub fn stl_decompose(series: &Series, config: &StlConfig) -> Result<Decomposition> {
    config.validate()?;
    let n = series.len();
    let np = series.period;
    if np < 2 {
        return param(format!("period must be at least 2, got {np}"));
    }
    if n < 2 * np {
        return param(format!("series of length {n} is shorter than two cycles of period {np}"));
    }
    if let Some(i) = series.values.iter().position(|v| !v.is_finite()) {
        return param(format!("series value at index {i} is missing or not finite"));
    }
    let y = &series.values;
    let smoother = Smoother {
        np,
        ns: config.s_window,
        nt: config.resolved_t_window(np),
        nl: next_odd(np),
        degree: config.loess_degree,
    };

    let mut trend = vec![0.0; n];
    let mut seasonal = vec![0.0; n];
    let mut rw: Option<Vec<f64>> = None;
    for outer in 0..=config.n_outer {
        for _ in 0..config.n_inner {
            smoother.inner_pass(y, rw.as_deref(), &mut trend, &mut seasonal);
        }
        if outer < config.n_outer {
            let resid: Vec<f64> = (0..n).map(|i| y[i] - trend[i] - seasonal[i]).collect();
            rw = Some(robustness_weights(&resid));
        }
    }
    let residual = (0..n).map(|i| y[i] - trend[i] - seasonal[i]).collect();
    Ok(Decomposition { trend, seasonal, residual })
}

struct Smoother {
    np: usize,
    ns: usize,
    nt: usize,
    nl: usize,
    degree: u8,
}

impl Smoother {
    fn inner_pass(&self, y: &[f64], rw: Option<&[f64]>, trend: &mut [f64], seasonal: &mut [f64]) {
        let n = y.len();
        let np = self.np;
        let detrended: Vec<f64> = y.iter().zip(trend.iter()).map(|(y, t)| y - t).collect();

        // cycle-subseries smoothing, each subseries extended one step at both ends
        let mut cycle = vec![0.0; n + 2 * np];
        for k in 0..np {
            let idx: Vec<usize> = (k..n).step_by(np).collect();
            let xs: Vec<f64> = (0..idx.len()).map(|j| j as f64).collect();
            let ys: Vec<f64> = idx.iter().map(|&i| detrended[i]).collect();
            let ws: Option<Vec<f64>> = rw.map(|rw| idx.iter().map(|&i| rw[i]).collect());
            let m = idx.len();
            for j in 0..m + 2 {
                let x0 = j as f64 - 1.0;
                let fallback = if j == 0 { ys[0] } else if j == m + 1 { ys[m - 1] } else { ys[j - 1] };
                cycle[k + j * np] =
                    fit_at(&xs, &ys, ws.as_deref(), x0, self.ns, self.degree).unwrap_or(fallback);
            }
        }

        // low-pass filter of the cycle series
        let ma = moving_average(&moving_average(&moving_average(&cycle, np), np), 3);
        debug_assert_eq!(ma.len(), n);
        let low = smooth_equispaced(&ma, None, self.nl, self.degree);

        for i in 0..n {
            seasonal[i] = cycle[np + i] - low[i];
        }
        let deseason: Vec<f64> = y.iter().zip(seasonal.iter()).map(|(y, s)| y - s).collect();
        let t = smooth_equispaced(&deseason, rw, self.nt, self.degree);
        trend.copy_from_slice(&t);
    }
}

fn smooth_equispaced(ys: &[f64], rw: Option<&[f64]>, q: usize, degree: u8) -> Vec<f64> {
    let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
    xs.iter()
        .zip(ys)
        .map(|(&x0, &y0)| fit_at(&xs, ys, rw, x0, q, degree).unwrap_or(y0))
        .collect()
}

fn moving_average(x: &[f64], len: usize) -> Vec<f64> {
    let out_len = x.len() + 1 - len;
    let mut out = Vec::with_capacity(out_len);
    let mut sum: f64 = x[..len].iter().sum();
    out.push(sum / len as f64);
    for i in 1..out_len {
        sum += x[i + len - 1] - x[i - 1];
        out.push(sum / len as f64);
    }
    out
}

fn robustness_weights(resid: &[f64]) -> Vec<f64> {
    let mut abs: Vec<f64> = resid.iter().map(|r| r.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let n = abs.len();
    let median = if n % 2 == 1 { abs[n / 2] } else { 0.5 * (abs[n / 2 - 1] + abs[n / 2]) };
    let h = 6.0 * median;
    resid
        .iter()
        .map(|r| {
            let r = r.abs();
            if h == 0.0 {
                if r == 0.0 { 1.0 } else { 0.0 }
            } else if r <= 1e-3 * h {
                1.0
            } else {
                bisquare(r / h)
            }
        })
        .collect()
}

/// Project trend + seasonal `horizon` steps past the end of `dec`.
///
/// The seasonal part repeats the final full cycle; the trend follows a
/// least-squares line through the last `period` trend values.
pub fn stl_extend(dec: &Decomposition, horizon: usize, period: usize) -> Result<Vec<f64>> {
    stl_extend_with(dec, horizon, period, Extension::CycleDrift)
}

/// [`stl_extend`] with an explicit trend extension rule.
pub fn stl_extend_with(
    dec: &Decomposition,
    horizon: usize,
    period: usize,
    rule: Extension,
) -> Result<Vec<f64>> {
    let n = dec.len();
    if period == 0 || n < period {
        return param(format!("decomposition of length {n} is shorter than one cycle of {period}"));
    }
    let (level, slope) = match rule {
        Extension::CycleDrift => end_line(&dec.trend[n - period..]),
        // Shorter histories use all the trend there is.
        Extension::WindowDrift(w) => end_line(&dec.trend[n - w.min(n)..]),
        Extension::FullDrift => end_line(&dec.trend),
        Extension::Flat => (dec.trend[n - 1], 0.0),
        Extension::WindowMean(w) => {
            let tail = &dec.trend[n - w.clamp(1, n)..];
            (tail.iter().sum::<f64>() / tail.len() as f64, 0.0)
        }
    };
    Ok((1..=horizon)
        .map(|h| {
            let season = dec.seasonal[n - period + (h - 1) % period];
            level + slope * h as f64 + season
        })
        .collect())
}

/// Least-squares line through equally spaced points: (value at last point, slope).
fn end_line(ys: &[f64]) -> (f64, f64) {
    if ys.len() < 2 {
        return (ys[ys.len() - 1], 0.0);
    }
    let m = ys.len() as f64;
    let xbar = (m - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    (ybar + slope * (m - 1.0 - xbar), slope)
}

/// Write `date,observed,trend,seasonal,residual` rows.
pub fn write_decomposition_csv<W: io::Write>(series: &Series, dec: &Decomposition, writer: W) -> Result<()> {
    if series.len() != dec.len() {
        return Err(Error::LengthMismatch { what: "series vs decomposition", left: series.len(), right: dec.len() });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "observed", "trend", "seasonal", "residual"])?;
    for i in 0..series.len() {
        w.write_record([
            series.date(i).to_string(),
            series.values[i].to_string(),
            dec.trend[i].to_string(),
            dec.seasonal[i].to_string(),
            dec.residual[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a file written by [`write_decomposition_csv`].
pub fn read_decomposition_csv<R: io::Read>(reader: R, period: usize) -> Result<(Series, Decomposition)> {
    let mut r = csv::Reader::from_reader(reader);
    let expected = ["date", "observed", "trend", "seasonal", "residual"];
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Schema { row: 0, column: headers.iter().collect::<Vec<_>>().join(","), message: format!("expected header {}", expected.join(",")) });
    }
    let mut dates = Vec::new();
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let date = rec[0].parse::<NaiveDate>().map_err(|e| Error::Schema { row: row + 1, column: "date".into(), message: e.to_string() })?;
        dates.push(date);
        for c in 0..4 {
            let v = rec[c + 1].parse::<f64>().map_err(|e| Error::Schema { row: row + 1, column: expected[c + 1].into(), message: e.to_string() })?;
            cols[c].push(v);
        }
    }
    let Some(&start) = dates.first() else {
        return param("decomposition file has no rows");
    };
    let [observed, trend, seasonal, residual] = cols;
    Ok((Series::new(start, observed, period)?, Decomposition { trend, seasonal, residual }))
}
