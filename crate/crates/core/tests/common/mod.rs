use fairlens::audit::metrics::{ConfusionCounts, GroupMetrics, GroupMetricsTable};

/// A table carrying only the given TPR values.
pub fn tpr_table(values: &[(&str, f64)]) -> GroupMetricsTable {
    let group = |name: &str, tpr: Option<f64>| GroupMetrics {
        group: name.to_string(),
        support: 0,
        outcome_rate: None,
        counts: ConfusionCounts::default(),
        tpr,
        tnr: None,
        accuracy: None,
    };
    GroupMetricsTable {
        attribute: "gender".into(),
        threshold: 0.5,
        groups: values.iter().map(|&(n, v)| group(n, Some(v))).collect(),
        overall: group("all", None),
    }
}
