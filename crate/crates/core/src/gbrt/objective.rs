use crate::error::{check_len, param, Result};

/// First and second derivatives of `½(e − ê)²` with respect to `ê`.
pub fn gradients_squared_error(targets: &[f64], predictions: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("targets vs predictions", targets.len(), predictions.len())?;
    let g = predictions.iter().zip(targets).map(|(p, t)| p - t).collect();
    Ok((g, vec![1.0; targets.len()]))
}

/// Newton-optimal leaf weight `−G / (H + λ)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda: f64) -> Result<f64> {
    let denom = h_sum + lambda;
    if !(denom > 0.0) {
        return param(format!("leaf denominator h_sum + lambda = {denom} must be positive"));
    }
    Ok(-g_sum / denom)
}

/// Structure score `G² / (H + λ)` of a node.
#[inline]
pub(crate) fn node_score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Loss reduction from splitting a node into (left, right), net of `γ`.
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, gamma: f64) -> Result<f64> {
    if !(hl + lambda > 0.0 && hr + lambda > 0.0 && hl + hr + lambda > 0.0) {
        return param(format!("degenerate split denominators (hl={hl}, hr={hr}, lambda={lambda})"));
    }
    Ok(0.5 * (node_score(gl, hl, lambda) + node_score(gr, hr, lambda) - node_score(gl + gr, hl + hr, lambda)) - gamma)
}
