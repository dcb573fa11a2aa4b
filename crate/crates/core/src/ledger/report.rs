use std::fmt::Write as _;

use crate::audit::{GroupMetricsTable, IdentificationVerdict, MetricName, ThresholdProvenance};
use crate::config::ToleranceMode;
use crate::ledger::AuditLedger;
use crate::mitigation::reports_to_markdown;

pub const PENDING: &str = "_Pending: not yet recorded in this ledger._";

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), pct)
}

/// `F: 53.7% M: 46.5% U: 52.9%`
fn group_row(table: &GroupMetricsTable, value: impl Fn(&crate::audit::GroupMetrics) -> Option<f64>) -> String {
    table
        .groups
        .iter()
        .map(|g| format!("{}: {}", g.group, opt_pct(value(g))))
        .collect::<Vec<_>>()
        .join(" ")
}

fn metric_rows(out: &mut String, table: &GroupMetricsTable, label: &str) {
    let total: usize = table.groups.iter().map(|g| g.support).sum();
    let _ = writeln!(out, "| Metric by {} | {} |", table.attribute, label);
    out.push_str("|---|---|\n");
    let _ = writeln!(
        out,
        "| Group balance | {} |",
        group_row(table, |g| (total > 0).then(|| g.support as f64 / total as f64))
    );
    let _ = writeln!(out, "| Outcome rate | {} |", group_row(table, |g| g.outcome_rate));
    for m in MetricName::ALL {
        let _ = writeln!(out, "| {} | {} |", m, group_row(table, |g| g.metric(m)));
    }
    out.push('\n');
}

/// Markdown rendering with one section per audit step. Deterministic:
/// timestamps and file-system paths are left out.
pub fn render_report(ledger: &AuditLedger) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Fairness audit report `{}`\n", ledger.ledger_id);
    let _ = writeln!(out, "- Schema version: {}", ledger.schema_version);
    let _ = writeln!(out, "- Seed: {}", ledger.seed);
    if let Some(alias) = &ledger.operator_alias {
        let _ = writeln!(out, "- Operator: {alias}");
    }
    if let Some(p) = &ledger.provenance {
        let d = &p.dataset;
        let source = if d.source.starts_with("synth:") { d.source.as_str() } else { "csv" };
        let _ = writeln!(
            out,
            "- Dataset: {source}, {} rows, {} positive, sha256 `{}`",
            d.n_rows,
            d.positives,
            &d.sha256[..16.min(d.sha256.len())]
        );
        let _ = writeln!(out, "- Features: {}", d.feature_names.join(", "));
        let _ = writeln!(out, "- Configuration sha256 `{}`", &p.config_sha256[..16.min(p.config_sha256.len())]);
    }
    out.push('\n');

    out.push_str("## Guidelines\n\n");
    if ledger.guideline_tags.is_empty() {
        out.push_str("_No guideline tags recorded._\n\n");
    } else {
        out.push_str("| Tag | Guideline | Principle |\n|---|---|---|\n");
        for g in &ledger.guideline_tags {
            let _ = writeln!(out, "| {g} | {} | {} |", g.text(), g.principle());
        }
        out.push('\n');
    }

    out.push_str("## Step 1: Prioritise scope\n\n");
    match &ledger.step1_scope {
        None => out.push_str(PENDING),
        Some(s) => {
            let _ = writeln!(out, "**In scope:** {}\n", s.model);
            let _ = writeln!(out, "**Justification:** {}\n", s.justification);
            let p = &s.model_params;
            let _ = writeln!(
                out,
                "Model: {} ({} trees, max depth {}, min leaf {}, feature fraction {}, bootstrap {}), sha256 `{}`.",
                s.model_kind,
                p.n_trees,
                p.max_depth,
                p.min_leaf,
                p.feature_fraction,
                if p.bootstrap { "on" } else { "off" },
                &s.model_sha256[..16.min(s.model_sha256.len())]
            );
            if !s.excluded.is_empty() {
                out.push_str("\nExcluded for now:\n\n");
                for e in &s.excluded {
                    let _ = writeln!(out, "- {}: {}", e.name, e.reason);
                }
            }
        }
    }
    out.push_str("\n\n## Step 2: Prioritise bias categories\n\n");
    match &ledger.step2_categories {
        None => out.push_str(PENDING),
        Some(s) => {
            out.push_str("| Category | Status | Rationale |\n|---|---|---|\n");
            for c in &s.entries {
                let _ = writeln!(out, "| {} | {} | {} |", c.name, c.status.label(), c.rationale);
            }
            if !s.observed.is_empty() {
                let shares: Vec<String> = s.observed.iter().map(|o| format!("{}: {}", o.name, pct(o.share))).collect();
                let rates: Vec<String> = s
                    .observed
                    .iter()
                    .map(|o| format!("{}: {}", o.name, opt_pct(o.outcome_rate)))
                    .collect();
                let _ = write!(
                    out,
                    "\nObserved `{}` balance: {}. Outcome rate: {}.",
                    s.attribute,
                    shares.join(" "),
                    rates.join(" ")
                );
            }
        }
    }
    out.push_str("\n\n## Step 3: Define bias metrics\n\n");
    match &ledger.step3_metrics {
        None => out.push_str(PENDING),
        Some(s) => {
            let _ = writeln!(
                out,
                "Decision threshold {}; groups compared: {}.\n",
                s.decision_threshold,
                s.groups.join(", ")
            );
            for d in &s.definitions {
                let _ = writeln!(out, "- **{}**: {}", d.metric, d.definition);
            }
            let mode = match s.tolerance_mode {
                ToleranceMode::Derived => format!("derived from {}-fold cross-validation", s.cv_folds.len()),
                ToleranceMode::Configured => "configured".to_string(),
            };
            let _ = writeln!(out, "\nTolerance thresholds ({mode}):\n");
            out.push_str("| Metric | Tolerance | Provenance |\n|---|---|---|\n");
            for t in &s.thresholds {
                let prov = match t.provenance {
                    ThresholdProvenance::Configured => "configured",
                    ThresholdProvenance::DerivedFromCv => "derived from CV",
                };
                let _ = writeln!(out, "| {} | ±{} | {prov} |", t.metric, pct(t.half_width));
            }
            if !s.cv_folds.is_empty() {
                out.push_str("\n| Fold | Held out | TPR | TNR | Accuracy |\n|---|---|---|---|---|\n");
                for f in &s.cv_folds {
                    let _ = writeln!(
                        out,
                        "| {} | {} | {} | {} | {} |",
                        f.fold + 1,
                        f.size,
                        opt_pct(f.tpr),
                        opt_pct(f.tnr),
                        pct(f.accuracy)
                    );
                }
            }
        }
    }
    out.push_str("\n\n## Step 4: Analyse bias presence\n\n");
    match &ledger.step4_findings {
        None => out.push_str(PENDING),
        Some(s) => {
            let _ = writeln!(out, "Evaluation: {}.\n", s.evaluation);
            metric_rows(&mut out, &s.group_metrics, "Baseline model");
            out.push_str("| Metric | Groups | Values | Disparity | Tolerance | Result |\n|---|---|---|---|---|---|\n");
            for f in &s.findings {
                let result = if f.exceeded {
                    match &f.favoured {
                        Some(g) => format!("**exceeded** (favours {g})"),
                        None => "**exceeded**".to_string(),
                    }
                } else if f.disparity.is_none() {
                    "undefined".to_string()
                } else {
                    "within tolerance".to_string()
                };
                let _ = writeln!(
                    out,
                    "| {} | {} vs {} | {} / {} | {} | ±{} | {result} |",
                    f.metric,
                    f.groups[0],
                    f.groups[1],
                    opt_pct(f.values[0]),
                    opt_pct(f.values[1]),
                    opt_pct(f.disparity),
                    pct(f.threshold.half_width)
                );
            }
            let _ = writeln!(
                out,
                "\nOverall: {}.",
                if s.any_exceeded {
                    "at least one disparity exceeds its tolerance"
                } else {
                    "all disparities within tolerance"
                }
            );
            if let Some(r) = &s.indirect_identification {
                let verdict = match r.verdict {
                    IdentificationVerdict::Identifiable => "identifiable",
                    IdentificationVerdict::NotIdentifiable => "not identifiable",
                };
                let _ = writeln!(
                    out,
                    "\nIndirect identification of `{}` ({}-fold, same model class): accuracy {} vs baseline {} (uplift {:+.1} points, threshold {:.1}): **{verdict}**.",
                    r.attribute,
                    r.folds,
                    pct(r.accuracy),
                    pct(r.baseline_accuracy),
                    100.0 * r.uplift,
                    100.0 * r.uplift_threshold
                );
            }
            if let Some(b) = &s.benchmark {
                // p below the smallest positive double underflows to zero
                let p = if b.result.p_value > 0.0 {
                    format!("p = {:.5e}", b.result.p_value)
                } else {
                    "p < 1e-300".to_string()
                };
                let _ = writeln!(
                    out,
                    "\nBenchmark comparison over {} (observed {} vs expected share {}): chi-squared {:.4} on {} degrees of freedom, {p}.",
                    b.categories.join(", "),
                    b.observed.iter().map(u64::to_string).collect::<Vec<_>>().join("/"),
                    b.benchmark.iter().map(|x| pct(*x)).collect::<Vec<_>>().join("/"),
                    b.result.statistic,
                    b.result.degrees_of_freedom,
                );
            }
            for a in &s.ablation {
                let _ = writeln!(out, "\nAblation of `{}` (change when removed, {}-fold):\n", a.feature, a.folds);
                out.push_str("| Group | Accuracy | TPR | TNR |\n|---|---|---|---|\n");
                let pts = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{:+.1} pts", 100.0 * v));
                for d in &a.deltas {
                    let _ = writeln!(out, "| {} | {} | {} | {} |", d.group, pts(d.accuracy), pts(d.tpr), pts(d.tnr));
                }
            }
        }
    }
    out.push_str("\n\n## Step 5: Form and implement a plan\n\n");
    match &ledger.step5_plan {
        None => out.push_str(PENDING),
        Some(s) => {
            let _ = writeln!(out, "Evaluation: {}.\n", s.evaluation);
            let reports: Vec<_> = s.candidates.iter().map(|c| c.report.clone()).collect();
            out.push_str(&reports_to_markdown(&reports));
            for c in &s.candidates {
                let _ = writeln!(out);
                metric_rows(&mut out, &c.metrics, c.candidate.name());
                if !c.excluded_groups.is_empty() {
                    let _ = writeln!(out, "Excluded for insufficient data: {}.\n", c.excluded_groups.join(", "));
                }
            }
            let _ = write!(
                out,
                "**Adopted:** {}. {}",
                s.adopted.map_or("none (baseline retained)", |c| c.name()),
                s.decision
            );
        }
    }
    out.push_str("\n\n## Step 6: Monitor and reflect\n\n");
    match &ledger.step6_monitoring {
        None => out.push_str(PENDING),
        Some(s) => {
            if !s.limitations.is_empty() {
                out.push_str("Limitations:\n\n");
                for l in &s.limitations {
                    let _ = writeln!(out, "- {l}");
                }
                out.push('\n');
            }
            if !s.follow_up.is_empty() {
                out.push_str("Follow-up:\n\n");
                for l in &s.follow_up {
                    let _ = writeln!(out, "- {l}");
                }
                out.push('\n');
            }
            if s.blind_spot_overrides.is_empty() {
                out.push_str("No blind-spot overrides recorded.");
            } else {
                out.push_str("Blind-spot overrides (monitor despite low model risk):\n");
                for b in &s.blind_spot_overrides {
                    let _ = write!(
                        out,
                        "\n- `{}` at or above the {} percentile with risk below {}: {} of {} players flagged",
                        b.feature,
                        pct(b.intensity_percentile),
                        b.risk_threshold,
                        b.flagged_rows.len(),
                        b.eval_rows
                    );
                }
            }
        }
    }
    out.push_str("\n\n## Explainability\n\n");
    if ledger.explainability_entries.is_empty() {
        out.push_str("_No explainability runs recorded._\n");
    } else {
        out.push_str("| Feature | Technique | Audience | Eval set | Mean risk range | Artifacts |\n|---|---|---|---|---|---|\n");
        for e in &ledger.explainability_entries {
            let means = e.curve.mean_risk();
            let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let files: Vec<&str> = e.artifacts.iter().map(|a| a.file.as_str()).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} rows{} | {} to {} | {} |",
                e.feature,
                e.technique,
                e.audience,
                e.curve.eval_set_size,
                if e.curve.balanced { ", balanced" } else { "" },
                pct(lo),
                pct(hi),
                if files.is_empty() { "none".to_string() } else { files.join(", ") }
            );
        }
    }
    out
}
