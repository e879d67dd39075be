//! Short-term demand forecasting and ordering for perishable stock.
//!
//! The pipeline decomposes daily demand with STL, models the residual with
//! gradient-boosted regression trees on lagged covariates, and feeds the
//! combined forecast into an age-stratified FIFO inventory with a learned
//! inventory target and reorder level.

pub mod datagen;
pub mod error;
pub mod forecast;
pub mod gbrt;
pub mod inventory;
pub mod policy;
pub mod timeseries;

pub use error::{Error, Result};
