//! Resolved run configuration: built-in defaults, then the config file, then flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rbcplan_core::datagen::GenConfig;
use rbcplan_core::forecast::{Candidate, ParamGrid, SelectionOptions};
use rbcplan_core::gbrt::GbrtConfig;
use rbcplan_core::policy::PlanConfig;
use rbcplan_core::timeseries::{Extension, StlConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub generate: GenConfig,
    pub stl: StlConfig,
    pub gbrt: GbrtConfig,
    pub train: TrainOptions,
    pub plan: PlanConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            generate: GenConfig::default(),
            stl: StlConfig::long_horizon(),
            gbrt: GbrtConfig::default(),
            train: TrainOptions::default(),
            plan: PlanConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    /// Trailing days of the input kept out of training.
    pub test_days: usize,
    pub select_features: bool,
    pub selection: SelectionOptions,
    pub cv_folds: usize,
    /// Search lattice; axes left out stay at the `stl`/`gbrt` values.
    pub grid: Option<GridSpec>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { test_days: 365, select_features: false, selection: SelectionOptions::default(), cv_folds: 5, grid: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub s_window: Option<Vec<usize>>,
    pub t_window: Option<Vec<usize>>,
    pub n_rounds: Option<Vec<usize>>,
    pub learning_rate: Option<Vec<f64>>,
    pub max_depth: Option<Vec<usize>>,
    pub min_child_weight: Option<Vec<f64>>,
    pub subsample_rows: Option<Vec<f64>>,
    pub subsample_cols: Option<Vec<f64>>,
    pub lambda: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn lattice(&self, stl: &StlConfig, gbrt: &GbrtConfig) -> Vec<Candidate> {
        let base = ParamGrid::single(stl, gbrt);
        let grid = ParamGrid {
            s_window: self.s_window.clone().unwrap_or(base.s_window),
            t_window: self.t_window.clone().map(|v| v.into_iter().map(Some).collect()).unwrap_or(base.t_window),
            n_rounds: self.n_rounds.clone().unwrap_or(base.n_rounds),
            learning_rate: self.learning_rate.clone().unwrap_or(base.learning_rate),
            max_depth: self.max_depth.clone().unwrap_or(base.max_depth),
            min_child_weight: self.min_child_weight.clone().unwrap_or(base.min_child_weight),
            subsample_rows: self.subsample_rows.clone().unwrap_or(base.subsample_rows),
            subsample_cols: self.subsample_cols.clone().unwrap_or(base.subsample_cols),
            lambda: self.lambda.clone().unwrap_or(base.lambda),
        };
        grid.lattice(stl, gbrt)
    }
}

/// Overlay `over` onto `base`, table by table.
fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_table() && v.is_table() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

impl RunConfig {
    /// Defaults overlaid with the keys present in `path`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let user: toml::Value = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let mut value = toml::Value::try_from(Self::default())?;
        merge(&mut value, user);
        let cfg: Self = value.try_into().with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.stl.validate()?;
        self.gbrt.validate()?;
        self.generate.validate()?;
        self.plan.costs.validate()?;
        if self.train.cv_folds == 0 {
            bail!("cv_folds must be at least 1");
        }
        Ok(())
    }
}

/// Parse `cycle`, `flat`, `full`, `drift:<n>` or `mean:<n>`.
pub fn parse_extension(s: &str) -> std::result::Result<Extension, String> {
    let (kind, n) = s.split_once(':').map_or((s, None), |(k, n)| (k, Some(n)));
    let n = || -> std::result::Result<usize, String> {
        n.ok_or_else(|| format!("'{s}' needs a window, e.g. {kind}:365"))?.parse().map_err(|e| format!("'{s}': {e}"))
    };
    match kind {
        "cycle" => Ok(Extension::CycleDrift),
        "full" => Ok(Extension::FullDrift),
        "flat" => Ok(Extension::Flat),
        "drift" => Ok(Extension::WindowDrift(n()?)),
        "mean" => Ok(Extension::WindowMean(n()?)),
        _ => Err(format!("unknown extension '{s}' (cycle, full, flat, drift:<n>, mean:<n>)")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = toml::to_string(&RunConfig::default()).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, RunConfig::default());
    }

    #[test]
    fn partial_tables_keep_other_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[stl]\ns_window = 11\n[plan.costs]\nurgent = 500.0\n").unwrap();
        let cfg = RunConfig::load(Some(&p)).unwrap();
        assert_eq!(cfg.stl.s_window, 11);
        assert_eq!(cfg.stl.t_window, StlConfig::long_horizon().t_window);
        assert_eq!(cfg.plan.costs.urgent, 500.0);
        assert_eq!(cfg.plan.costs.holding, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[train]\ntest_dayz = 3\n").unwrap();
        assert!(RunConfig::load(Some(&p)).is_err());
    }

    #[test]
    fn extension_syntax() {
        assert_eq!(parse_extension("drift:30").unwrap(), Extension::WindowDrift(30));
        assert_eq!(parse_extension("full").unwrap(), Extension::FullDrift);
        assert!(parse_extension("drift").is_err());
        assert!(parse_extension("wobble").is_err());
    }
}
