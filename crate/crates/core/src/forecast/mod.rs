//! Hybrid demand forecasting: STL trend and seasonality plus a boosted
//! residual model on lagged covariates, with baselines, tuning and metrics.

mod dataset;
mod hybrid;
mod metrics;
mod report;
mod semiweekly;
mod tuning;

pub use dataset::{DailyRecord, Dataset};
pub use hybrid::{
    clamp_nonnegative, fit_hybrid, fit_stl_alone, fit_stl_linear, predict_daily, refit_like, HybridModel, LinearModel,
    ResidualModel, HYBRID_FORMAT, HYBRID_VERSION, WEEKLY,
};
pub use metrics::{lagged_cross_correlation, mape, rmse};
pub use report::{read_forecast_csv, write_forecast_csv, ForecastReport, ForecastRow};
pub use semiweekly::aggregate_semiweekly;
pub(crate) use semiweekly::block_len;
pub use tuning::{
    cv_score, grid_search_cv, iterative_feature_selection, time_folds, Candidate, CvOutcome, ParamGrid, Selection,
    SelectionOptions, SelectionRound,
};
