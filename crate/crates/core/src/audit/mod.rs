//! Bias audit: group metrics, tolerance bands, findings, and the supporting
//! analyses (indirect identification, benchmark comparison, feature ablation).

pub mod ablation;
pub mod chi2;
pub mod disparity;
pub mod findings;
pub mod indirect;
pub mod metrics;
pub mod tolerance;

pub use ablation::{feature_ablation_delta, AblationResult, GroupDelta};
pub use chi2::{chi_squared_group_benchmark, normalize_proportions, ChiSquaredResult};
pub use disparity::{compute_disparity, disparity_detail, Disparity};
pub use findings::{any_exceeded, evaluate_bias, AuditFinding};
pub use indirect::{
    indirect_identification_test, IdentificationVerdict, IndirectIdentificationReport, DEFAULT_UPLIFT_THRESHOLD,
};
pub use metrics::{
    compute_group_metrics, group_metrics_from_predictions, group_metrics_from_scores, ConfusionCounts, GroupMetrics,
    GroupMetricsTable, MetricName,
};
pub use tolerance::{
    derive_tolerance_from_cv, ThresholdProvenance, ToleranceThreshold, DEFAULT_HALF_WIDTH, MIN_DERIVED_HALF_WIDTH,
};
