//! The audit ledger: a versioned JSON record of the six audit steps, the
//! explainability runs, and enough provenance to recompute every number.
//!
//! Ledgers are stored as canonical JSON (sorted keys, floats rounded to nine
//! significant digits) so that identical content always has identical bytes,
//! and each section carries a SHA-256 digest for tamper evidence.

mod report;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::audit::{
    AblationResult, AuditFinding, ChiSquaredResult, GroupMetricsTable, IndirectIdentificationReport, MetricName,
    ToleranceThreshold,
};
use crate::config::{AuditConfig, Candidate, CategoryEntry, ExcludedAlgorithm, Guideline, ToleranceMode};
use crate::curves::{CurveFormat, RiskCurve};
use crate::error::{Error, Result};
use crate::mitigation::InterventionReport;
use crate::model::ForestParams;
use crate::numeric::round_sig;

pub use report::{render_report, PENDING};

pub const SCHEMA_VERSION: u64 = 1;
pub const FLOAT_DIGITS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditLedger {
    pub schema_version: u64,
    pub ledger_id: String,
    #[serde(default)]
    pub created_at: Option<String>,
    #[serde(default)]
    pub updated_at: Option<String>,
    pub seed: u64,
    #[serde(default)]
    pub operator_alias: Option<String>,
    #[serde(default)]
    pub provenance: Option<Provenance>,
    #[serde(default)]
    pub guideline_tags: Vec<Guideline>,
    #[serde(default)]
    pub step1_scope: Option<Step1Scope>,
    #[serde(default)]
    pub step2_categories: Option<Step2Categories>,
    #[serde(default)]
    pub step3_metrics: Option<Step3Metrics>,
    #[serde(default)]
    pub step4_findings: Option<Step4Findings>,
    #[serde(default)]
    pub step5_plan: Option<Step5Plan>,
    #[serde(default)]
    pub step6_monitoring: Option<Step6Monitoring>,
    #[serde(default)]
    pub explainability_entries: Vec<ExplainabilityEntry>,
    #[serde(default)]
    pub section_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub config: AuditConfig,
    pub config_sha256: String,
    pub dataset: DatasetProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetProvenance {
    /// `synth:<preset>`, `synth:spec` or the CSV path.
    pub source: String,
    /// Digest of the dataset's normalised CSV form.
    pub sha256: String,
    pub n_rows: usize,
    pub positives: usize,
    pub feature_names: Vec<String>,
    pub attribute: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step1Scope {
    pub model: String,
    pub justification: String,
    pub excluded: Vec<ExcludedAlgorithm>,
    pub model_kind: String,
    pub model_params: ForestParams,
    /// Digest of the model trained on the full dataset.
    pub model_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservedCategory {
    pub name: String,
    pub support: usize,
    pub share: f64,
    pub outcome_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step2Categories {
    pub attribute: String,
    pub entries: Vec<CategoryEntry>,
    pub observed: Vec<ObservedCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDefinition {
    pub metric: MetricName,
    pub definition: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldSummary {
    pub fold: usize,
    pub size: usize,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step3Metrics {
    pub decision_threshold: f64,
    pub definitions: Vec<MetricDefinition>,
    pub groups: Vec<String>,
    pub tolerance_mode: ToleranceMode,
    pub thresholds: Vec<ToleranceThreshold>,
    pub cv_folds: Vec<FoldSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkComparison {
    pub categories: Vec<String>,
    pub observed: Vec<u64>,
    pub benchmark: Vec<f64>,
    pub result: ChiSquaredResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step4Findings {
    /// How the predictions behind the metrics were produced.
    pub evaluation: String,
    pub group_metrics: GroupMetricsTable,
    pub findings: Vec<AuditFinding>,
    pub any_exceeded: bool,
    pub indirect_identification: Option<IndirectIdentificationReport>,
    pub benchmark: Option<BenchmarkComparison>,
    pub ablation: Vec<AblationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateOutcome {
    pub candidate: Candidate,
    pub metrics: GroupMetricsTable,
    pub report: InterventionReport,
    /// Categories left out of a blind-separate ensemble for lack of data.
    pub excluded_groups: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step5Plan {
    pub evaluation: String,
    pub baseline: GroupMetricsTable,
    pub candidates: Vec<CandidateOutcome>,
    pub adopted: Option<Candidate>,
    pub decision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlindSpotOverride {
    pub feature: String,
    pub intensity_percentile: f64,
    pub risk_threshold: f64,
    pub eval_rows: usize,
    pub flagged_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step6Monitoring {
    pub limitations: Vec<String>,
    pub follow_up: Vec<String>,
    pub blind_spot_overrides: Vec<BlindSpotOverride>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveArtifact {
    /// File name, relative to the output directory.
    pub file: String,
    pub format: CurveFormat,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainabilityEntry {
    pub technique: String,
    pub audience: String,
    pub feature: String,
    pub eval_seed: u64,
    pub curve: RiskCurve,
    pub artifacts: Vec<CurveArtifact>,
}

pub const SECTIONS: [&str; 10] = [
    "provenance",
    "guideline_tags",
    "step1_scope",
    "step2_categories",
    "step3_metrics",
    "step4_findings",
    "step5_plan",
    "step6_monitoring",
    "explainability_entries",
    "operator_alias",
];

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn canonicalize(value: &mut Value) {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x, FLOAT_DIGITS)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

/// Canonical value tree: floats rounded, keys sorted (serde_json maps are ordered).
pub fn canonical_value<T: Serialize>(item: &T) -> Result<Value> {
    let mut v = serde_json::to_value(item)?;
    canonicalize(&mut v);
    Ok(v)
}

pub fn canonical_json<T: Serialize>(item: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&canonical_value(item)?)?;
    s.push('\n');
    Ok(s)
}

/// Deterministic id from the configuration and seed.
pub fn ledger_id(config: &AuditConfig, seed: u64) -> Result<String> {
    let digest = sha256_hex(format!("{}\n{seed}", canonical_json(config)?).as_bytes());
    Ok(format!("fl-{}", &digest[..16]))
}

impl AuditLedger {
    pub fn empty(ledger_id: impl Into<String>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            ledger_id: ledger_id.into(),
            created_at: None,
            updated_at: None,
            seed,
            operator_alias: None,
            provenance: None,
            guideline_tags: Vec::new(),
            step1_scope: None,
            step2_categories: None,
            step3_metrics: None,
            step4_findings: None,
            step5_plan: None,
            step6_monitoring: None,
            explainability_entries: Vec::new(),
            section_hashes: BTreeMap::new(),
        }
    }

    fn section_value(&self, name: &str) -> Result<Value> {
        match name {
            "provenance" => canonical_value(&self.provenance),
            "guideline_tags" => canonical_value(&self.guideline_tags),
            "step1_scope" => canonical_value(&self.step1_scope),
            "step2_categories" => canonical_value(&self.step2_categories),
            "step3_metrics" => canonical_value(&self.step3_metrics),
            "step4_findings" => canonical_value(&self.step4_findings),
            "step5_plan" => canonical_value(&self.step5_plan),
            "step6_monitoring" => canonical_value(&self.step6_monitoring),
            "explainability_entries" => canonical_value(&self.explainability_entries),
            "operator_alias" => canonical_value(&self.operator_alias),
            other => Err(Error::InvalidLedger(format!("unknown section `{other}`"))),
        }
    }

    /// Current digests of every non-empty section.
    pub fn compute_hashes(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for name in SECTIONS {
            let v = self.section_value(name)?;
            let empty = v.is_null() || v.as_array().is_some_and(Vec::is_empty);
            if !empty {
                out.insert(name.to_string(), sha256_hex(serde_json::to_string(&v)?.as_bytes()));
            }
        }
        Ok(out)
    }

    pub fn seal(&mut self) -> Result<()> {
        self.section_hashes = self.compute_hashes()?;
        Ok(())
    }

    /// Sections whose stored digest no longer matches their content.
    pub fn tampered_sections(&self) -> Result<Vec<String>> {
        let current = self.compute_hashes()?;
        let mut names: Vec<String> = current
            .keys()
            .chain(self.section_hashes.keys())
            .filter(|k| current.get(*k) != self.section_hashes.get(*k))
            .cloned()
            .collect();
        names.sort();
        names.dedup();
        Ok(names)
    }

    /// Applies `update`, which may only change the `owned` sections. Refuses
    /// to touch a ledger whose digests do not match its content.
    pub fn append<F>(&mut self, owned: &[&str], update: F) -> Result<()>
    where
        F: FnOnce(&mut AuditLedger) -> Result<()>,
    {
        let tampered = self.tampered_sections()?;
        if !tampered.is_empty() {
            return Err(Error::InvalidLedger(format!(
                "section digests do not match content ({}); refusing to append",
                tampered.join(", ")
            )));
        }
        let before = self.section_hashes.clone();
        let mut next = self.clone();
        update(&mut next)?;
        next.seal()?;
        for name in SECTIONS.iter().filter(|s| !owned.contains(s)) {
            if before.get(*name) != next.section_hashes.get(*name) {
                return Err(Error::InvalidLedger(format!("append would modify earlier section `{name}`")));
            }
        }
        next.validate()?;
        *self = next;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        if self.step4_findings.is_some() && self.step3_metrics.is_none() {
            return Err(Error::InvalidLedger("step 4 findings present without step 3 metric definitions".into()));
        }
        if self.step5_plan.is_some() && self.step4_findings.is_none() {
            return Err(Error::InvalidLedger("step 5 plan present without step 4 findings".into()));
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> Result<String> {
        canonical_json(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidLedger(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        let found = value
            .get("schema_version")
            .ok_or_else(|| Error::InvalidLedger("missing schema_version".into()))?
            .as_u64()
            .ok_or_else(|| Error::InvalidLedger("schema_version is not an integer".into()))?;
        if found != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found,
                expected: SCHEMA_VERSION,
            });
        }
        let ledger: AuditLedger = from_value_anchored(text)?;
        ledger.validate()?;
        Ok(ledger)
    }
}

fn from_value_anchored<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidLedger(format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn load_ledger(path: &Path) -> Result<AuditLedger> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AuditLedger::from_json_str(&text)
}

/// Seals and writes atomically: a temporary file in the same directory is
/// renamed over the target.
pub fn save_ledger(ledger: &mut AuditLedger, path: &Path) -> Result<()> {
    ledger.validate()?;
    ledger.seal()?;
    write_atomic(path, ledger.to_canonical_json()?.as_bytes())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

/// A numeric or structural difference between two canonical value trees.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub path: String,
    pub stored: String,
    pub recomputed: String,
}

/// Compares `stored` and `recomputed`; numbers may differ by `tolerance`.
pub fn diff_values(path: &str, stored: &Value, recomputed: &Value, tolerance: f64, out: &mut Vec<Mismatch>) {
    let mut push = || {
        out.push(Mismatch {
            path: path.to_string(),
            stored: stored.to_string(),
            recomputed: recomputed.to_string(),
        })
    };
    match (stored, recomputed) {
        (Value::Number(a), Value::Number(b)) => {
            let (x, y) = (a.as_f64().unwrap_or(f64::NAN), b.as_f64().unwrap_or(f64::NAN));
            if !((x - y).abs() <= tolerance) {
                push();
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                push();
                return;
            }
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                diff_values(&format!("{path}[{i}]"), x, y, tolerance, out);
            }
        }
        (Value::Object(a), Value::Object(b)) => {
            let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            for k in keys {
                let null = Value::Null;
                diff_values(&format!("{path}.{k}"), a.get(k).unwrap_or(&null), b.get(k).unwrap_or(&null), tolerance, out);
            }
        }
        (a, b) if a == b => {}
        _ => push(),
    }
}
