//! Contiguous k-fold cross-validation and loss metrics.

pub mod folds;
pub mod metrics;
pub mod runner;

pub use folds::{contiguous_kfold, FoldPlan, DEFAULT_FOLDS};
pub use metrics::{
    clarke_zone, compute, g_metric, l1, rl1, rmse, BaseMetric, ClarkeZone, Metric, PenaltyTable,
};
pub use runner::{
    derive_seed, evaluate, percent_improvement, CellResult, EvalOptions, FoldAudit, MetricValues,
    PatientResult,
};
