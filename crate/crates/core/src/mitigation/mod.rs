//! Bias interventions and their before/after comparison.

pub mod attribute;
pub mod compare;
pub mod ensemble;

pub use attribute::{encode_group_indicators, train_with_attribute, AttributeAwareModel};
pub use compare::{
    compare_intervention_scores, compare_interventions, relative_reduction, reports_to_markdown, Direction,
    GroupShift, InterventionReport, InterventionVerdict,
};
pub use ensemble::{train_blind_separate, BlindSeparateEnsemble, EnsembleMember, DEFAULT_MIN_GROUP_SUPPORT};
