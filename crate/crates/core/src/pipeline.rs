//! The audit steps as library calls: each takes the configuration recorded in
//! the ledger plus its seed, so any step can be re-run to verify the ledger.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{
    chi_squared_group_benchmark, derive_tolerance_from_cv, evaluate_bias, feature_ablation_delta,
    group_metrics_from_scores, indirect_identification_test, normalize_proportions, MetricName, ToleranceThreshold,
};
use crate::config::{AuditConfig, Candidate, CategoryEntry, CategoryStatus, DatasetSource, ToleranceMode};
use crate::curves::{balance_eval_set, feature_risk_curve, flag_blind_spot_players, render_svg, write_curve_csv, CurveFormat};
use crate::error::{Error, Result};
use crate::ledger::{
    canonical_json, canonical_value, diff_values, ledger_id, sha256_hex, AuditLedger, BenchmarkComparison,
    BlindSpotOverride, CandidateOutcome, CurveArtifact, DatasetProvenance, ExplainabilityEntry, FoldSummary,
    MetricDefinition, Mismatch, ObservedCategory, Provenance, Step1Scope, Step2Categories, Step3Metrics,
    Step4Findings, Step5Plan, Step6Monitoring,
};
use crate::mitigation::{train_blind_separate, train_with_attribute, InterventionReport, InterventionVerdict};
use crate::model::cv::{fold_metrics, fold_model_seed, forest_out_of_fold_scores, out_of_fold_scores, stratified_folds};
use crate::model::{train_random_forest, PredictionOracle, RandomForestModel, RowScorer, TabularDataset};
use crate::rng::{derive_seed, stream};
use crate::synth::{generate, preset, SynthConfig, TruthRow};

/// Numbers recomputed by verification must match the ledger to this tolerance.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

pub struct LoadedDataset {
    pub dataset: TabularDataset,
    /// Present for synthetic data.
    pub truth: Option<Vec<TruthRow>>,
    pub source: String,
    pub label: String,
}

impl LoadedDataset {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.dataset.write_csv(&mut buf, &self.label)?;
        Ok(buf)
    }

    pub fn sha256(&self) -> Result<String> {
        Ok(sha256_hex(&self.to_csv()?))
    }
}

/// The synthetic configuration a `synth` dataset source describes, with the run seed.
pub fn resolve_synth_config(source: &DatasetSource, seed: u64) -> Result<SynthConfig> {
    let DatasetSource::Synth { preset: name, spec, n_rows } = source else {
        return Err(Error::InvalidConfig("dataset source is not synthetic".into()));
    };
    let mut cfg = match (name, spec) {
        (Some(name), None) => preset(name)?,
        (None, Some(spec)) => spec.clone(),
        _ => return Err(Error::InvalidConfig("synthetic dataset needs exactly one of `preset` or `spec`".into())),
    };
    if let Some(n) = n_rows {
        cfg.n_rows = *n;
    }
    cfg.seed = seed;
    Ok(cfg)
}

pub fn load_dataset(config: &AuditConfig, seed: u64) -> Result<LoadedDataset> {
    match &config.dataset {
        DatasetSource::Csv { path, roles } => {
            let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let dataset = TabularDataset::read_csv(std::io::BufReader::new(file), roles)?;
            Ok(LoadedDataset {
                dataset,
                truth: None,
                source: path.display().to_string(),
                label: roles.label.clone(),
            })
        }
        source @ DatasetSource::Synth { preset: name, .. } => {
            let cfg = resolve_synth_config(source, seed)?;
            let out = generate(&cfg)?;
            Ok(LoadedDataset {
                dataset: out.dataset,
                truth: Some(out.truth),
                source: format!("synth:{}", name.as_deref().unwrap_or("spec")),
                label: cfg.label,
            })
        }
    }
}

/// The model under audit: a forest over the features only, trained on all rows.
pub fn train_audited_model(config: &AuditConfig, dataset: &TabularDataset, seed: u64) -> Result<RandomForestModel> {
    train_random_forest(dataset, &config.model, derive_seed(seed, stream::MODEL))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: String,
    pub seed: u64,
    pub dataset_sha256: String,
    pub model: RandomForestModel,
}

impl ModelFile {
    pub fn sha256(&self) -> Result<String> {
        model_sha256(&self.model)
    }
}

pub fn model_sha256(model: &RandomForestModel) -> Result<String> {
    Ok(sha256_hex(canonical_json(model)?.as_bytes()))
}

fn metric_definition(metric: MetricName) -> &'static str {
    match metric {
        MetricName::Tpr => "true positive rate, TP / (TP + FN): share of at-risk players the model flags",
        MetricName::Tnr => "true negative rate, TN / (TN + FP): share of not-at-risk players the model leaves alone",
        MetricName::Accuracy => "(TP + TN) / all players in the group",
    }
}

fn check_groups(dataset: &TabularDataset, groups: &[String]) -> Result<()> {
    let g = dataset.require_groups()?;
    for name in groups {
        if g.code_of(name).is_none() {
            return Err(Error::UnknownGroup(name.clone()));
        }
    }
    Ok(())
}

/// Steps 1 to 4 on a fresh ledger.
///
/// Group metrics come from out-of-fold predictions over the whole dataset, on
/// the same folds whose spread sets the derived tolerance.
pub fn run_audit(config: &AuditConfig, seed: u64, data: &LoadedDataset) -> Result<AuditLedger> {
    config.validate()?;
    let ds = &data.dataset;
    let groups = ds.require_groups()?;
    check_groups(ds, &config.audit.groups)?;
    for f in &config.audit.ablation_features {
        ds.feature_index(f)?;
    }

    let mut ledger = AuditLedger::empty(ledger_id(config, seed)?, seed);
    ledger.operator_alias = config.operator_alias.clone();
    ledger.guideline_tags = config.guidelines.clone();
    ledger.provenance = Some(Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_sha256: sha256_hex(canonical_json(config)?.as_bytes()),
        dataset: DatasetProvenance {
            source: data.source.clone(),
            sha256: data.sha256()?,
            n_rows: ds.n_rows(),
            positives: ds.positives(),
            feature_names: ds.feature_names().to_vec(),
            attribute: groups.name.clone(),
        },
    });

    // Step 1
    let model = train_audited_model(config, ds, seed)?;
    ledger.step1_scope = Some(Step1Scope {
        model: config.scope.model.clone(),
        justification: config.scope.justification.clone(),
        excluded: config.scope.excluded.clone(),
        model_kind: model.kind().to_string(),
        model_params: config.model,
        model_sha256: model_sha256(&model)?,
    });

    // Step 2
    let mut entries = config.categories.clone();
    match entries.iter().find(|c| c.name == groups.name) {
        Some(c) if c.status != CategoryStatus::Analysed => {
            return Err(Error::InvalidConfig(format!(
                "category `{}` is listed as {} but is the attribute under audit",
                c.name,
                c.status.label()
            )))
        }
        Some(_) => {}
        None => entries.insert(
            0,
            CategoryEntry {
                name: groups.name.clone(),
                status: CategoryStatus::Analysed,
                rationale: "protected attribute present in the data".into(),
            },
        ),
    }
    let supports = groups.supports();
    let observed = groups
        .categories
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let pos = (0..ds.n_rows()).filter(|&r| groups.codes[r] == c && ds.label(r)).count();
            ObservedCategory {
                name: name.clone(),
                support: supports[c],
                share: supports[c] as f64 / ds.n_rows() as f64,
                outcome_rate: (supports[c] > 0).then(|| pos as f64 / supports[c] as f64),
            }
        })
        .collect();
    ledger.step2_categories = Some(Step2Categories {
        attribute: groups.name.clone(),
        entries,
        observed,
    });

    // Step 3
    let a = &config.audit;
    let folds = stratified_folds(ds.labels(), a.folds, seed)?;
    let scores = forest_out_of_fold_scores(ds, &folds, &config.model, seed)?;
    let per_fold = fold_metrics(ds, &folds, &scores, a.threshold);
    let thresholds = a
        .metrics
        .iter()
        .map(|&m| match a.tolerance.mode {
            ToleranceMode::Derived => derive_tolerance_from_cv(&per_fold, m),
            ToleranceMode::Configured => ToleranceThreshold::configured(m, a.tolerance.half_width),
        })
        .collect::<Result<Vec<_>>>()?;
    ledger.step3_metrics = Some(Step3Metrics {
        decision_threshold: a.threshold,
        definitions: a
            .metrics
            .iter()
            .map(|&m| MetricDefinition {
                metric: m,
                definition: metric_definition(m).to_string(),
            })
            .collect(),
        groups: a.groups.clone(),
        tolerance_mode: a.tolerance.mode,
        thresholds: thresholds.clone(),
        cv_folds: per_fold
            .iter()
            .map(|f| FoldSummary {
                fold: f.fold,
                size: f.held_out.len(),
                tpr: f.tpr,
                tnr: f.tnr,
                accuracy: f.accuracy,
            })
            .collect(),
    });

    // Step 4
    let table = group_metrics_from_scores(ds, &scores, a.threshold)?;
    let findings = evaluate_bias(&table, &thresholds, &a.groups)?;
    let indirect = if a.indirect.enabled {
        Some(indirect_identification_test(
            ds,
            &config.model,
            seed,
            a.indirect.folds,
            a.indirect.uplift_threshold,
        )?)
    } else {
        None
    };
    let benchmark = match &a.benchmark {
        None => None,
        Some(b) => {
            let mut categories = Vec::new();
            let mut observed = Vec::new();
            let mut weights = Vec::new();
            for (name, w) in b {
                let code = groups.code_of(name).ok_or_else(|| Error::UnknownGroup(name.clone()))?;
                categories.push(name.clone());
                observed.push(supports[code] as u64);
                weights.push(*w);
            }
            let benchmark = normalize_proportions(&weights)?;
            let result = chi_squared_group_benchmark(&observed, &benchmark)?;
            Some(BenchmarkComparison {
                categories,
                observed,
                benchmark,
                result,
            })
        }
    };
    let ablation = a
        .ablation_features
        .iter()
        .map(|f| feature_ablation_delta(ds, f, &config.model, seed, a.folds, a.threshold))
        .collect::<Result<Vec<_>>>()?;
    ledger.step4_findings = Some(Step4Findings {
        evaluation: format!("out-of-fold predictions from stratified {}-fold cross-validation", a.folds),
        any_exceeded: findings.iter().any(|f| f.exceeded),
        group_metrics: table,
        findings,
        indirect_identification: indirect,
        benchmark,
        ablation,
    });
    ledger.seal()?;
    Ok(ledger)
}

fn recorded_config(ledger: &AuditLedger) -> Result<&AuditConfig> {
    ledger
        .provenance
        .as_ref()
        .map(|p| &p.config)
        .ok_or_else(|| Error::InvalidLedger("ledger has no provenance; run `audit` first".into()))
}

fn check_dataset(ledger: &AuditLedger, data: &LoadedDataset) -> Result<()> {
    let recorded = &ledger.provenance.as_ref().expect("checked by caller").dataset.sha256;
    let actual = data.sha256()?;
    if recorded != &actual {
        return Err(Error::InvalidLedger(format!(
            "dataset digest {} does not match the ledger's {}",
            &actual[..16],
            &recorded[..16.min(recorded.len())]
        )));
    }
    Ok(())
}

fn compute_plan(config: &AuditConfig, seed: u64, ds: &TabularDataset, any_exceeded: bool) -> Result<Step5Plan> {
    let m = &config.mitigation;
    let groups = config.mitigation_groups();
    check_groups(ds, groups)?;
    let a = &config.audit;
    let folds = stratified_folds(ds.labels(), a.folds, seed)?;
    let baseline_scores = forest_out_of_fold_scores(ds, &folds, &config.model, seed)?;
    let baseline = group_metrics_from_scores(ds, &baseline_scores, a.threshold)?;

    let mut candidates = Vec::new();
    for &candidate in &m.candidates {
        let mut excluded: Vec<String> = Vec::new();
        let scores = match candidate {
            Candidate::BlindSeparate => out_of_fold_scores(ds, &folds, |train, f| {
                let e = train_blind_separate(train, &config.model, fold_model_seed(seed, f), m.min_group_support)?;
                excluded.extend(e.excluded().iter().cloned());
                Ok(Box::new(e) as Box<dyn RowScorer>)
            })?,
            Candidate::AttributeAware => out_of_fold_scores(ds, &folds, |train, f| {
                Ok(Box::new(train_with_attribute(train, &config.model, fold_model_seed(seed, f))?) as Box<dyn RowScorer>)
            })?,
        };
        excluded.sort();
        excluded.dedup();
        let metrics = group_metrics_from_scores(ds, &scores, a.threshold)?;
        let report = InterventionReport::from_tables(candidate.name(), &baseline, &metrics, m.priority_metric, groups)?;
        candidates.push(CandidateOutcome {
            candidate,
            metrics,
            report,
            excluded_groups: excluded,
        });
    }

    let eligible = |c: &&CandidateOutcome| {
        c.report.verdict == InterventionVerdict::Improved
            && !c.report.narrowed_by_worsening
            && c.report.accuracy_delta >= -m.max_accuracy_loss
    };
    let best = candidates
        .iter()
        .filter(eligible)
        .max_by(|x, y| {
            y.report
                .intervention_disparity
                .total_cmp(&x.report.intervention_disparity)
        })
        .map(|c| c.candidate);
    let (adopted, decision) = if !any_exceeded {
        (
            None,
            "No audit finding exceeded its tolerance, so the baseline model is retained; candidates are recorded for reference.".to_string(),
        )
    } else {
        match best {
            Some(c) => {
                let r = &candidates.iter().find(|o| o.candidate == c).unwrap().report;
                (
                    Some(c),
                    format!(
                        "Lowest {} disparity among candidates that narrow the gap without only worsening the favoured group and cost at most {:.1} points of accuracy ({} to {}).",
                        m.priority_metric,
                        100.0 * m.max_accuracy_loss,
                        format_pct(r.baseline_disparity),
                        format_pct(r.intervention_disparity)
                    ),
                )
            }
            None => (
                None,
                "No candidate reduced the disparity within the accepted accuracy cost; the finding stays open for step 6.".to_string(),
            ),
        }
    };
    Ok(Step5Plan {
        evaluation: format!(
            "out-of-fold predictions on the audit's {}-fold split; every candidate is retrained per fold",
            a.folds
        ),
        baseline,
        candidates,
        adopted,
        decision,
    })
}

fn format_pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Step 5: evaluates the configured interventions and appends the plan.
pub fn run_mitigation(ledger: &mut AuditLedger, data: &LoadedDataset) -> Result<()> {
    let config = recorded_config(ledger)?.clone();
    check_dataset(ledger, data)?;
    let any_exceeded = ledger
        .step4_findings
        .as_ref()
        .ok_or_else(|| Error::InvalidLedger("no step 4 findings; run `audit` first".into()))?
        .any_exceeded;
    let plan = compute_plan(&config, ledger.seed, &data.dataset, any_exceeded)?;
    ledger.append(&["step5_plan"], |next| {
        next.step5_plan = Some(plan);
        Ok(())
    })
}

type Artifacts = Vec<(String, Vec<u8>)>;

fn eval_set(config: &AuditConfig, seed: u64, ds: &TabularDataset) -> Result<(u64, TabularDataset)> {
    let eval_seed = derive_seed(seed, stream::EVAL);
    let eval = if config.explain.balance {
        balance_eval_set(ds, eval_seed)?
    } else {
        ds.clone()
    };
    Ok((eval_seed, eval))
}

fn explain_feature(
    config: &AuditConfig,
    model: &RandomForestModel,
    (eval_seed, eval): (u64, &TabularDataset),
    feature: &str,
    formats: &[CurveFormat],
) -> Result<(ExplainabilityEntry, Artifacts)> {
    let curve = feature_risk_curve(model, eval, feature, config.explain.points)?;
    let mut artifacts = Vec::new();
    let mut files = Vec::new();
    for &format in formats {
        let bytes = match format {
            CurveFormat::Csv => {
                let mut buf = Vec::new();
                write_curve_csv(&curve, &mut buf)?;
                buf
            }
            CurveFormat::Svg => render_svg(&curve).into_bytes(),
        };
        let file = format!("risk_curve_{feature}.{}", format.extension());
        artifacts.push(CurveArtifact {
            file: file.clone(),
            format,
            sha256: sha256_hex(&bytes),
        });
        files.push((file, bytes));
    }
    let entry = ExplainabilityEntry {
        technique: "feature risk curve".into(),
        audience: "licensees, regulators and domain experts (global, feature-specific)".into(),
        feature: feature.to_string(),
        eval_seed,
        curve,
        artifacts,
    };
    Ok((entry, files))
}

fn blind_spot_overrides(config: &AuditConfig, ds: &TabularDataset, model: &RandomForestModel) -> Result<Vec<BlindSpotOverride>> {
    config
        .explain
        .blind_spot
        .iter()
        .map(|b| {
            Ok(BlindSpotOverride {
                feature: b.feature.clone(),
                intensity_percentile: b.intensity_percentile,
                risk_threshold: b.risk_threshold,
                eval_rows: ds.n_rows(),
                flagged_rows: flag_blind_spot_players(ds, model, &b.feature, b.intensity_percentile, b.risk_threshold)?,
            })
        })
        .collect()
}

/// Risk curves for the audited model. Writes artifacts into `out_dir` when
/// given and records one explainability entry per feature (replacing earlier
/// entries for the same feature). `formats` overrides the configured artifact
/// formats. Returns the written paths.
pub fn run_explain(
    ledger: &mut AuditLedger,
    data: &LoadedDataset,
    model: &RandomForestModel,
    out_dir: Option<&Path>,
    formats: Option<&[CurveFormat]>,
) -> Result<Vec<PathBuf>> {
    let config = recorded_config(ledger)?.clone();
    check_dataset(ledger, data)?;
    if let Some(scope) = &ledger.step1_scope {
        if scope.model_sha256 != model_sha256(model)? {
            return Err(Error::InvalidLedger("model does not match the audited model recorded in step 1".into()));
        }
    }
    let ds = &data.dataset;
    let formats = formats.unwrap_or(&config.explain.formats);
    let features: Vec<String> = if config.explain.features.is_empty() {
        ds.feature_names().to_vec()
    } else {
        config.explain.features.clone()
    };
    let (eval_seed, eval) = eval_set(&config, ledger.seed, ds)?;
    let explained = features
        .iter()
        .map(|f| explain_feature(&config, model, (eval_seed, &eval), f, formats))
        .collect::<Result<Vec<_>>>()?;
    let overrides = blind_spot_overrides(&config, ds, model)?;
    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (_, files) in &explained {
            for (name, bytes) in files {
                let path = dir.join(name);
                std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
    }
    ledger.append(&["explainability_entries", "step6_monitoring"], |next| {
        for (entry, _) in explained {
            next.explainability_entries.retain(|e| e.feature != entry.feature);
            next.explainability_entries.push(entry);
        }
        let step6 = next.step6_monitoring.get_or_insert_with(|| Step6Monitoring {
            limitations: config.monitoring.limitations.clone(),
            follow_up: config.monitoring.follow_up.clone(),
            blind_spot_overrides: Vec::new(),
        });
        for o in overrides {
            step6.blind_spot_overrides.retain(|b| b.feature != o.feature);
            step6.blind_spot_overrides.push(o);
        }
        Ok(())
    })?;
    Ok(written)
}

/// Recomputes every recorded step from the ledger's configuration and seed
/// and lists the differences, including sections whose digests do not match.
pub fn verify_ledger(ledger: &AuditLedger, data: &LoadedDataset) -> Result<Vec<Mismatch>> {
    let mut out: Vec<Mismatch> = ledger
        .tampered_sections()?
        .into_iter()
        .map(|s| Mismatch {
            path: format!("section_hashes.{s}"),
            stored: ledger.section_hashes.get(&s).cloned().unwrap_or_default(),
            recomputed: "digest of current content differs".into(),
        })
        .collect();
    let config = recorded_config(ledger)?;
    let fresh = run_audit(config, ledger.seed, data)?;
    let stored_prov = ledger.provenance.as_ref().expect("checked above");
    let fresh_prov = fresh.provenance.as_ref().expect("set by run_audit");
    if stored_prov.dataset.sha256 != fresh_prov.dataset.sha256 {
        out.push(Mismatch {
            path: ".provenance.dataset.sha256".into(),
            stored: stored_prov.dataset.sha256.clone(),
            recomputed: fresh_prov.dataset.sha256.clone(),
        });
    }
    let mut compare = |name: &str, stored: serde_json::Value, recomputed: serde_json::Value| {
        diff_values(&format!(".{name}"), &stored, &recomputed, VERIFY_TOLERANCE, &mut out);
    };
    compare("step1_scope", canonical_value(&ledger.step1_scope)?, canonical_value(&fresh.step1_scope)?);
    compare("step2_categories", canonical_value(&ledger.step2_categories)?, canonical_value(&fresh.step2_categories)?);
    compare("step3_metrics", canonical_value(&ledger.step3_metrics)?, canonical_value(&fresh.step3_metrics)?);
    compare("step4_findings", canonical_value(&ledger.step4_findings)?, canonical_value(&fresh.step4_findings)?);
    if let Some(plan) = &ledger.step5_plan {
        let any = fresh.step4_findings.as_ref().is_some_and(|s| s.any_exceeded);
        let recomputed = compute_plan(config, ledger.seed, &data.dataset, any)?;
        compare("step5_plan", canonical_value(plan)?, canonical_value(&recomputed)?);
    }
    if !ledger.explainability_entries.is_empty() {
        let model = train_audited_model(config, &data.dataset, ledger.seed)?;
        let (eval_seed, eval) = eval_set(config, ledger.seed, &data.dataset)?;
        for stored in &ledger.explainability_entries {
            let formats: Vec<CurveFormat> = stored.artifacts.iter().map(|a| a.format).collect();
            let path = format!("explainability_entries[{}]", stored.feature);
            let recomputed = match explain_feature(config, &model, (eval_seed, &eval), &stored.feature, &formats) {
                Ok((entry, _)) => canonical_value(&entry)?,
                Err(_) => serde_json::Value::Null,
            };
            compare(&path, canonical_value(stored)?, recomputed);
        }
    }
    if let Some(step6) = &ledger.step6_monitoring {
        if !step6.blind_spot_overrides.is_empty() {
            let model = train_audited_model(config, &data.dataset, ledger.seed)?;
            let recomputed = blind_spot_overrides(config, &data.dataset, &model)?;
            for stored in &step6.blind_spot_overrides {
                let r = recomputed.iter().find(|o| o.feature == stored.feature);
                compare(
                    &format!("step6_monitoring.blind_spot_overrides[{}]", stored.feature),
                    canonical_value(stored)?,
                    canonical_value(&r)?,
                );
            }
        }
    }
    Ok(out)
}
