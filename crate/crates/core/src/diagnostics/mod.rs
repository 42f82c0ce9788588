//! Quantitative checks on chain behaviour: one-step coefficients, risk
//! curves, standard-error tables and summary statistics.

pub mod coefficients;
pub mod risk;
pub mod stats;
pub mod tables;

pub use coefficients::{coefficients_at_zero, estimate_coefficients, CoefficientEstimate};
pub use risk::{risk_curves, RiskOptions, RiskReport, RiskSource};
pub use stats::{autocorrelation, batch_means_se, ks_critical_value, ks_statistic, ls_slope};
pub use tables::{default_replications, scaling_fit, se_table, EpsRule, ScalingFit, SeCell, SeTable, SeTableConfig, MIN_REPLICATIONS};
