use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Dense feature matrix stored column-major; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    rows: usize,
}

impl FeatureMatrix {
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if names.is_empty() {
            return param("feature matrix needs at least one column");
        }
        if names.len() != columns.len() {
            return param(format!("{} feature names for {} columns", names.len(), columns.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return param(format!("duplicate feature name '{n}'"));
            }
        }
        let rows = columns[0].len();
        if rows == 0 {
            return param("feature matrix needs at least one row");
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != rows {
                return param(format!("column '{name}' has {} rows, expected {rows}", col.len()));
            }
            if let Some(i) = col.iter().position(|v| v.is_some_and(|v| !v.is_finite())) {
                return param(format!("column '{name}' row {i} is NaN or infinite; use a missing cell instead"));
            }
        }
        Ok(Self { names, columns, rows })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let d = names.len();
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return param(format!("row {i} has {} values, expected {d}", rows[i].len()));
        }
        let columns = (0..d).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Self::from_columns(names, columns)
    }

    /// Convenience constructor for fully observed data.
    pub fn from_dense(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Option<f64>>> = rows.iter().map(|r| r.iter().copied().map(Some).collect()).collect();
        Self::from_rows(names, &rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, c: usize) -> &[Option<f64>] {
        &self.columns[c]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.columns[col][row]
    }
}
