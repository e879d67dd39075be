//! Locally weighted polynomial regression with tricube neighborhood weights.

use crate::error::{check_len, param, Result};

/// Tricube kernel on a scaled distance `u = |x - x0| / h`.
#[inline]
pub(crate) fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

/// Bisquare kernel used for robustness weights.
#[inline]
pub(crate) fn bisquare(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        t * t
    }
}

/// Smooth `ys` against strictly increasing `xs`.
///
/// Each output is a local polynomial of `degree` fitted by weighted least
/// squares over the `round(span * n)` nearest neighbours of that x, with
/// tricube weights scaled to the distance of the farthest neighbour. When
/// `robustness_weights` is supplied it multiplies the tricube weights.
pub fn loess_smooth(
    xs: &[f64],
    ys: &[f64],
    span: f64,
    degree: u8,
    robustness_weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_len("xs vs ys", xs.len(), ys.len())?;
    if let Some(rw) = robustness_weights {
        check_len("xs vs robustness weights", xs.len(), rw.len())?;
    }
    if degree > 2 {
        return param(format!("loess degree must be 0, 1 or 2, got {degree}"));
    }
    if !(span > 0.0 && span <= 1.0) {
        return param(format!("span must lie in (0, 1], got {span}"));
    }
    let n = xs.len();
    if span * n as f64 + 1e-9 < f64::from(degree) + 1.0 {
        return param(format!(
            "span {span} covers fewer than {} of {n} points, too small for degree {degree}",
            degree + 1
        ));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || xs.iter().any(|x| !x.is_finite()) {
        return param("xs must be finite and strictly increasing");
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return param("ys must be finite");
    }
    let q = ((span * n as f64).round() as usize).clamp(usize::from(degree) + 1, n);
    Ok(xs
        .iter()
        .zip(ys)
        .map(|(&x0, &y0)| fit_at(xs, ys, robustness_weights, x0, q, degree).unwrap_or(y0))
        .collect())
}

/// Local fit evaluated at `x0` using the `q` nearest neighbours in sorted `xs`.
///
/// `q` may exceed `xs.len()`; the bandwidth is then widened by `(q - n) / 2`
/// as in the reference STL smoother. Returns `None` when every neighbour has
/// zero weight.
pub(crate) fn fit_at(
    xs: &[f64],
    ys: &[f64],
    rw: Option<&[f64]>,
    x0: f64,
    q: usize,
    degree: u8,
) -> Option<f64> {
    let n = xs.len();
    if n == 0 {
        return None;
    }
    let take = q.min(n);
    // grow a window of `take` points outward from x0's insertion position
    let pos = xs.partition_point(|&x| x < x0);
    let (mut lo, mut hi) = (pos, pos); // half-open [lo, hi)
    while hi - lo < take {
        if lo == 0 {
            hi += 1;
        } else if hi == n {
            lo -= 1;
        } else if x0 - xs[lo - 1] <= xs[hi] - x0 {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    let mut h = (x0 - xs[lo]).max(xs[hi - 1] - x0);
    if q > n {
        h += ((q - n) / 2) as f64;
    }

    let mut sw = 0.0;
    let mut weights = Vec::with_capacity(hi - lo);
    for i in lo..hi {
        let r = (xs[i] - x0).abs();
        let mut w = if h > 0.0 { tricube(r / h) } else if r == 0.0 { 1.0 } else { 0.0 };
        if let Some(rw) = rw {
            w *= rw[i];
        }
        sw += w;
        weights.push(w);
    }
    if sw <= 0.0 {
        return None;
    }
    let xs = &xs[lo..hi];
    let ys = &ys[lo..hi];
    Some(local_poly(xs, ys, &weights, sw, x0, degree))
}

fn local_poly(xs: &[f64], ys: &[f64], w: &[f64], sw: f64, x0: f64, degree: u8) -> f64 {
    let mean_y = w.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    if degree == 0 {
        return mean_y;
    }
    let mean_x = w.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let range = xs[xs.len() - 1] - xs[0];
    if degree == 1 {
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for i in 0..xs.len() {
            let dx = xs[i] - mean_x;
            sxx += w[i] * dx * dx;
            sxy += w[i] * dx * (ys[i] - mean_y);
        }
        if sxx.sqrt() <= 1e-3 * range * sw.sqrt() || sxx <= 0.0 {
            return mean_y;
        }
        return mean_y + sxy / sxx * (x0 - mean_x);
    }
    // degree 2: weighted normal equations in coordinates centred on x0
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for i in 0..xs.len() {
        let d = xs[i] - x0;
        let p = [1.0, d, d * d];
        for r in 0..3 {
            b[r] += w[i] * p[r] * ys[i];
            for c in 0..3 {
                m[r][c] += w[i] * p[r] * p[c];
            }
        }
    }
    match solve3(m, b) {
        Some(beta) => beta[0],
        None => local_poly(xs, ys, w, sw, x0, 1),
    }
}

/// Gaussian elimination with partial pivoting; `None` if near-singular.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}
