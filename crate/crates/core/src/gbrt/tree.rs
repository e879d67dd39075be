//! Exact greedy regression tree construction on gradient statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{leaf_weight, node_score};
use super::{FeatureMatrix, GbrtConfig};
use crate::error::{check_len, param, Result};

/// A regression tree node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        /// Rows with `value < threshold` go left.
        threshold: f64,
        /// Direction taken by rows whose value is missing.
        default_left: bool,
        /// Loss reduction of this split, net of gamma.
        gain: f64,
        /// Training rows that reached this node.
        cover: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        weight: f64,
        cover: usize,
    },
}

impl TreeNode {
    /// Raw leaf weight reached by `row` of `x`.
    pub fn evaluate(&self, x: &FeatureMatrix, row: usize) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { weight, .. } => return *weight,
                TreeNode::Split { feature, threshold, default_left, left, right, .. } => {
                    let go_left = match x.get(row, *feature) {
                        Some(v) => v < *threshold,
                        None => *default_left,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaf weights in left-to-right order.
    pub fn leaf_weights(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let TreeNode::Leaf { weight, .. } = n {
                out.push(*weight);
            }
        });
        out
    }

    pub(crate) fn visit<F: FnMut(&TreeNode)>(&self, f: &mut F) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

/// Grow one tree on all rows and columns of `x`.
pub fn build_tree(x: &FeatureMatrix, g: &[f64], h: &[f64], config: &GbrtConfig) -> Result<TreeNode> {
    let rows: Vec<usize> = (0..x.n_rows()).collect();
    let cols: Vec<usize> = (0..x.n_cols()).collect();
    build_tree_on(x, g, h, &rows, &cols, config)
}

/// Grow one tree restricted to the given row and column subsets.
pub(crate) fn build_tree_on(
    x: &FeatureMatrix,
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    cols: &[usize],
    config: &GbrtConfig,
) -> Result<TreeNode> {
    check_len("gradients vs rows", g.len(), x.n_rows())?;
    check_len("hessians vs rows", h.len(), x.n_rows())?;
    if rows.is_empty() {
        return param("cannot build a tree on an empty row set");
    }
    config.validate()?;
    let sorted = cols
        .iter()
        .map(|&c| {
            let col = x.column(c);
            let mut present: Vec<usize> = rows.iter().copied().filter(|&r| col[r].is_some()).collect();
            present.sort_by(|&a, &b| col[a].unwrap().total_cmp(&col[b].unwrap()).then(a.cmp(&b)));
            present
        })
        .collect();
    let builder = Builder { x, g, h, cols, config };
    let mut scratch = vec![false; x.n_rows()];
    builder.grow(rows.to_vec(), sorted, 0, &mut scratch)
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    g: &'a [f64],
    h: &'a [f64],
    cols: &'a [usize],
    config: &'a GbrtConfig,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    slot: usize,
    threshold: f64,
    default_left: bool,
    gain: f64,
}

const PARALLEL_MIN_ROWS: usize = 1024;

impl Builder<'_> {
    fn grow(&self, rows: Vec<usize>, sorted: Vec<Vec<usize>>, depth: usize, scratch: &mut [bool]) -> Result<TreeNode> {
        let lambda = self.config.lambda;
        let gs: f64 = rows.iter().map(|&r| self.g[r]).sum();
        let hs: f64 = rows.iter().map(|&r| self.h[r]).sum();
        let leaf = |gs, hs| -> Result<TreeNode> {
            Ok(TreeNode::Leaf { weight: leaf_weight(gs, hs, lambda)?, cover: rows.len() })
        };
        if depth >= self.config.max_depth || rows.len() < 2 {
            return leaf(gs, hs);
        }
        let n_node = rows.len();
        let search = |slot: usize| self.best_for_feature(slot, &sorted[slot], gs, hs, n_node);
        let per_feature: Vec<Option<Candidate>> = if rows.len() >= PARALLEL_MIN_ROWS {
            (0..sorted.len()).into_par_iter().map(search).collect()
        } else {
            (0..sorted.len()).map(search).collect()
        };
        // reduce in column order so ties resolve to the lowest feature index
        let mut best: Option<Candidate> = None;
        for c in per_feature.into_iter().flatten() {
            if best.is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(best) = best else {
            return leaf(gs, hs);
        };

        let feature = self.cols[best.slot];
        let col = self.x.column(feature);
        for &r in &rows {
            scratch[r] = match col[r] {
                Some(v) => v < best.threshold,
                None => best.default_left,
            };
        }
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| scratch[r]);
        let mut left_sorted = Vec::with_capacity(sorted.len());
        let mut right_sorted = Vec::with_capacity(sorted.len());
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&r| scratch[r]);
            left_sorted.push(l);
            right_sorted.push(r);
        }
        let cover = rows.len();
        drop(rows);
        let left = self.grow(left_rows, left_sorted, depth + 1, scratch)?;
        let right = self.grow(right_rows, right_sorted, depth + 1, scratch)?;
        Ok(TreeNode::Split {
            feature,
            threshold: best.threshold,
            default_left: best.default_left,
            gain: best.gain,
            cover,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    /// Best split on one feature, scanning thresholds in increasing order.
    fn best_for_feature(
        &self,
        slot: usize,
        present: &[usize],
        g_total: f64,
        h_total: f64,
        n_node: usize,
    ) -> Option<Candidate> {
        let col = self.x.column(self.cols[slot]);
        let GbrtConfig { lambda, gamma, min_child_weight, .. } = *self.config;
        let (gp, hp): (f64, f64) = present.iter().fold((0.0, 0.0), |(a, b), &r| (a + self.g[r], b + self.h[r]));
        let g_miss = g_total - gp;
        let h_miss = h_total - hp;
        let has_missing = present.len() < n_node;
        let parent = node_score(g_total, h_total, lambda);

        let mut best: Option<Candidate> = None;
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..present.len().saturating_sub(1) {
            let r = present[k];
            gl += self.g[r];
            hl += self.h[r];
            let a = col[r].unwrap();
            let b = col[present[k + 1]].unwrap();
            if a >= b {
                continue;
            }
            let mut threshold = a + (b - a) / 2.0;
            if threshold <= a {
                threshold = b;
            }
            let directions: &[bool] = if has_missing { &[true, false] } else { &[true] };
            for &default_left in directions {
                let (gl, hl) = if default_left { (gl + g_miss, hl + h_miss) } else { (gl, hl) };
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < min_child_weight || hr < min_child_weight || hl + lambda <= 0.0 || hr + lambda <= 0.0 {
                    continue;
                }
                let children = node_score(gl, hl, lambda) + node_score(gr, hr, lambda);
                let raw = 0.5 * (children - parent);
                // round-off floor: homogeneous nodes must not split on noise
                if raw <= 1e-12 * children {
                    continue;
                }
                let gain = raw - gamma;
                if gain <= 0.0 {
                    continue;
                }
                if best.is_none_or(|c| gain > c.gain) {
                    best = Some(Candidate { slot, threshold, default_left, gain });
                }
            }
        }
        best
    }

}
