//! Credit-scoring metrics and probability calibration.

mod calibration;
mod metrics;

pub use calibration::{beta_calibrate_fit, platt_fit, CalibrationMap, PlattInput};
pub use metrics::{
    auc, gini, h_measure, metrics_report, recall_precision, recall_precision_at_default_rate,
    roc_points, score_moments, HMeasureParams, MetricsReport, RecallPrecision, ScoreMoments,
    ScoredSet, ThresholdRule,
};
