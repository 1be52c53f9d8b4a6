//! Kernel ridge learners and summary metrics.

pub mod metrics;
pub mod ridge;

pub use metrics::{average_ranks, summarize_metrics, MetricsReport};
pub use ridge::{cross_validate, fit_classifier, fit_ridge, kfold_indices, predict, snr_db, RidgeClassifier, RidgeModel};
