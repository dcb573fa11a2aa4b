//! The audit configuration document: one JSON file declaring the data,
//! model, scope, categories, metrics and guideline tags for one audit.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{MetricName, DEFAULT_HALF_WIDTH, DEFAULT_UPLIFT_THRESHOLD};
use crate::curves::{CurveFormat, DEFAULT_POINTS};
use crate::error::{Error, Result};
use crate::mitigation::DEFAULT_MIN_GROUP_SUPPORT;
use crate::model::{ColumnRoles, ForestParams, DEFAULT_THRESHOLD};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ForestParams,
    pub scope: ScopeConfig,
    #[serde(default)]
    pub categories: Vec<CategoryEntry>,
    #[serde(default)]
    pub audit: AuditSettings,
    #[serde(default)]
    pub mitigation: MitigationSettings,
    #[serde(default)]
    pub explain: ExplainSettings,
    #[serde(default)]
    pub guidelines: Vec<Guideline>,
    #[serde(default)]
    pub monitoring: MonitoringSettings,
    /// Reserved for cross-operator benchmarking; carried into the ledger as-is.
    #[serde(default)]
    pub operator_alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        roles: ColumnRoles,
    },
    /// Generated in memory. The run seed replaces any seed in `spec`.
    Synth {
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        spec: Option<SynthConfig>,
        #[serde(default)]
        n_rows: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopeConfig {
    pub model: String,
    pub justification: String,
    #[serde(default)]
    pub excluded: Vec<ExcludedAlgorithm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcludedAlgorithm {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CategoryStatus {
    Analysed,
    NotCollected,
    Deferred,
}

impl CategoryStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CategoryStatus::Analysed => "analysed",
            CategoryStatus::NotCollected => "not collected",
            CategoryStatus::Deferred => "deferred",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryEntry {
    pub name: String,
    pub status: CategoryStatus,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ToleranceMode {
    /// Half the range of per-fold values from k-fold cross-validation.
    Derived,
    Configured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSettings {
    pub mode: ToleranceMode,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

impl Default for ToleranceSettings {
    fn default() -> Self {
        Self {
            mode: ToleranceMode::Derived,
            half_width: DEFAULT_HALF_WIDTH,
        }
    }
}

fn default_half_width() -> f64 {
    DEFAULT_HALF_WIDTH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndirectSettings {
    pub enabled: bool,
    pub folds: usize,
    pub uplift_threshold: f64,
}

impl Default for IndirectSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            folds: 5,
            uplift_threshold: DEFAULT_UPLIFT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub threshold: f64,
    pub folds: usize,
    pub metrics: Vec<MetricName>,
    /// Groups compared pairwise for findings.
    pub groups: Vec<String>,
    pub tolerance: ToleranceSettings,
    pub indirect: IndirectSettings,
    /// Reference proportions per category for a goodness-of-fit test.
    pub benchmark: Option<BTreeMap<String, f64>>,
    pub ablation_features: Vec<String>,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            folds: 10,
            metrics: vec![MetricName::Tpr, MetricName::Tnr],
            groups: vec!["F".into(), "M".into()],
            tolerance: ToleranceSettings::default(),
            indirect: IndirectSettings::default(),
            benchmark: None,
            ablation_features: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidate {
    BlindSeparate,
    AttributeAware,
}

impl Candidate {
    pub fn name(&self) -> &'static str {
        match self {
            Candidate::BlindSeparate => "blind-separate ensemble",
            Candidate::AttributeAware => "attribute reinstated as input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigationSettings {
    pub candidates: Vec<Candidate>,
    pub priority_metric: MetricName,
    /// Defaults to the audit groups.
    pub groups: Option<Vec<String>>,
    pub min_group_support: usize,
    /// Largest overall accuracy drop an adopted candidate may cost.
    pub max_accuracy_loss: f64,
}

impl Default for MitigationSettings {
    fn default() -> Self {
        Self {
            candidates: vec![Candidate::AttributeAware, Candidate::BlindSeparate],
            priority_metric: MetricName::Tpr,
            groups: None,
            min_group_support: DEFAULT_MIN_GROUP_SUPPORT,
            max_accuracy_loss: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlindSpotSettings {
    pub feature: String,
    /// Fraction in (0, 1), e.g. 0.99 for the top 1%.
    pub intensity_percentile: f64,
    pub risk_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    /// Empty means every feature.
    pub features: Vec<String>,
    pub points: usize,
    pub balance: bool,
    pub formats: Vec<CurveFormat>,
    pub blind_spot: Option<BlindSpotSettings>,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        Self {
            features: Vec::new(),
            points: DEFAULT_POINTS,
            balance: true,
            formats: vec![CurveFormat::Csv, CurveFormat::Svg],
            blind_spot: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonitoringSettings {
    pub limitations: Vec<String>,
    pub follow_up: Vec<String>,
}

/// Industry guidelines an audit can be tagged with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Guideline {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    G7,
    G8,
    G9,
}

impl Guideline {
    pub const ALL: [Guideline; 9] = [
        Guideline::G1,
        Guideline::G2,
        Guideline::G3,
        Guideline::G4,
        Guideline::G5,
        Guideline::G6,
        Guideline::G7,
        Guideline::G8,
        Guideline::G9,
    ];

    pub fn text(&self) -> &'static str {
        match self {
            Guideline::G1 => "Invest in AI for responsible gambling to protect the vulnerable",
            Guideline::G2 => "Embrace explainability in sensitive applications of AI",
            Guideline::G3 => "Build ‘human-in-the-loop’ into AI systems where appropriate",
            Guideline::G4 => {
                "Leverage AI to deliver entertainment, however, change products where evidence points towards harm"
            }
            Guideline::G5 => "Avoid creating or re-enforcing unfair biases",
            Guideline::G6 => "Be open about AI blind spots and failures",
            Guideline::G7 => "Be scientifically robust and continually evaluate",
            Guideline::G8 => "Incorporate security, privacy, and diversity by design",
            Guideline::G9 => {
                "Empower all stakeholders, including customers, staff and Boards, in the possibilities and risks of AI"
            }
        }
    }

    pub fn principle(&self) -> &'static str {
        match self {
            Guideline::G1 | Guideline::G4 | Guideline::G9 => "Beneficence",
            Guideline::G2 => "Explicability",
            Guideline::G3 => "Autonomy",
            Guideline::G5 | Guideline::G6 => "Justice",
            Guideline::G7 | Guideline::G8 => "Non-Maleficence",
        }
    }
}

impl fmt::Display for Guideline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl AuditConfig {
    /// Parses and validates. Errors carry the line and column of the problem.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: AuditConfig = serde_json::from_str(text).map_err(|e| {
            Error::InvalidConfig(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative CSV paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json_str(&text).map_err(|e| match e {
            Error::InvalidConfig(msg) => Error::InvalidConfig(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if let DatasetSource::Csv { path: data, .. } = &mut cfg.dataset {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn mitigation_groups(&self) -> &[String] {
        self.mitigation.groups.as_deref().unwrap_or(&self.audit.groups)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match &self.dataset {
            DatasetSource::Synth { preset, spec, .. } => {
                if preset.is_some() == spec.is_some() {
                    return bad("synthetic dataset needs exactly one of `preset` or `spec`".into());
                }
            }
            DatasetSource::Csv { roles, .. } => {
                if roles.group.is_none() {
                    return bad("dataset roles must name the protected attribute column (`group`)".into());
                }
            }
        }
        self.model.validate().map_err(|e| Error::InvalidConfig(format!("model: {e}")))?;
        let a = &self.audit;
        if !(0.0..=1.0).contains(&a.threshold) {
            return bad(format!("audit.threshold {} outside [0, 1]", a.threshold));
        }
        if a.folds < 2 {
            return bad("audit.folds must be >= 2".into());
        }
        if a.metrics.is_empty() {
            return bad("audit.metrics must not be empty".into());
        }
        if a.groups.len() < 2 {
            return bad("audit.groups needs at least two groups to compare".into());
        }
        if !(a.tolerance.half_width > 0.0 && a.tolerance.half_width.is_finite()) {
            return bad("audit.tolerance.half_width must be a positive number".into());
        }
        if a.indirect.enabled && a.indirect.folds < 2 {
            return bad("audit.indirect.folds must be >= 2".into());
        }
        if self.mitigation_groups().len() < 2 {
            return bad("mitigation.groups needs at least two groups".into());
        }
        if !(0.0..=1.0).contains(&self.mitigation.max_accuracy_loss) {
            return bad("mitigation.max_accuracy_loss outside [0, 1]".into());
        }
        if self.explain.points < 1 {
            return bad("explain.points must be >= 1".into());
        }
        if let Some(b) = &self.explain.blind_spot {
            if !(b.intensity_percentile > 0.0 && b.intensity_percentile < 1.0) || !(0.0..=1.0).contains(&b.risk_threshold) {
                return bad("explain.blind_spot intensity_percentile must be in (0, 1) and risk_threshold in [0, 1]".into());
            }
        }
        let mut names: Vec<&str> = self.categories.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate category in `categories`".into());
        }
        Ok(())
    }
}
