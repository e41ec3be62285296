//! Smoothed Pickands-type estimators of the extreme value index built on
//! CVaR (super-quantile) order statistics.

pub mod amse_bootstrap;
pub mod cli;
pub mod asymptotics;
pub mod core_stats;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod evt_kernels;
pub mod experiments;
pub mod measure_opt;
pub mod measures;
pub mod numeric;
pub mod quadrature;

pub use error::{Error, Result};
