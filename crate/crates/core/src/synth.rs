//! Synthetic player-behaviour datasets with controllable group structure and
//! plantable bias, for exercising audits where real operator data is
//! unavailable.
//!
//! Labels follow a logistic model over standardised features. Bias can be
//! planted two ways, both recorded in the ground truth: a group-conditional
//! shift of one feature's coefficient, and group-conditional label flips.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution as _, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TabularDataset;
use crate::rng::{derive_seed, rng_from_seed, stream};

const PROPORTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Distribution {
    Uniform { low: f64, high: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Beta { alpha: f64, beta: f64 },
}

impl Distribution {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            Distribution::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            Distribution::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid distribution parameters {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { low, high } => (low + high) / 2.0,
            Distribution::LogNormal { mu, sigma } => (mu + sigma * sigma / 2.0).exp(),
            Distribution::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Distribution::Uniform { low, high } => (high - low) / 12f64.sqrt(),
            Distribution::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()
            }
            Distribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha * beta / (s * s * (s + 1.0))).sqrt()
            }
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Distribution::Uniform { low, high } => (low, high),
            Distribution::LogNormal { .. } => (0.0, f64::INFINITY),
            Distribution::Beta { .. } => (0.0, 1.0),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { low, high } => Uniform::new(low, high).expect("validated").sample(rng),
            Distribution::LogNormal { mu, sigma } => LogNormal::new(mu, sigma).expect("validated").sample(rng),
            Distribution::Beta { alpha, beta } => Beta::new(alpha, beta).expect("validated").sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub distribution: Distribution,
    /// Logistic coefficient on the standardised feature.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub proportion: f64,
    /// Target observed positive rate; calibrates this group's intercept.
    #[serde(default)]
    pub outcome_rate: Option<f64>,
    /// Probability of flipping each label, in `[0, 0.5)`.
    #[serde(default)]
    pub label_noise: f64,
    /// Added to the named features' coefficients for this group only.
    #[serde(default)]
    pub coefficient_shifts: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub seed: u64,
    #[serde(default = "default_attribute")]
    pub attribute: String,
    #[serde(default = "default_label")]
    pub label: String,
    pub unspecified: String,
    pub groups: Vec<GroupSpec>,
    pub features: Vec<FeatureSpec>,
    /// Intercept for groups without an `outcome_rate` target.
    #[serde(default)]
    pub intercept: f64,
}

fn default_attribute() -> String {
    "gender".into()
}

fn default_label() -> String {
    "self_excluded".into()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 1 {
            return Err(Error::InvalidConfig("n_rows must be >= 1".into()));
        }
        if self.groups.is_empty() {
            return Err(Error::InvalidConfig("at least one group is required".into()));
        }
        let total: f64 = self.groups.iter().map(|g| g.proportion).sum();
        if (total - 1.0).abs() > PROPORTION_TOLERANCE || self.groups.iter().any(|g| g.proportion < 0.0) {
            return Err(Error::InvalidConfig(format!("group proportions sum to {total}, not 1")));
        }
        if !self.groups.iter().any(|g| g.name == self.unspecified) {
            return Err(Error::InvalidConfig(format!(
                "unspecified category `{}` is not a declared group",
                self.unspecified
            )));
        }
        for g in &self.groups {
            if !(0.0..0.5).contains(&g.label_noise) {
                return Err(Error::InvalidConfig(format!("label noise for `{}` must be in [0, 0.5)", g.name)));
            }
            if let Some(rate) = g.outcome_rate {
                if !(rate > g.label_noise && rate < 1.0 - g.label_noise) {
                    return Err(Error::InvalidConfig(format!(
                        "outcome rate for `{}` is unreachable with label noise {}",
                        g.name, g.label_noise
                    )));
                }
            }
            for f in g.coefficient_shifts.keys() {
                if !self.features.iter().any(|s| &s.name == f) {
                    return Err(Error::InvalidConfig(format!("coefficient shift on unknown feature `{f}`")));
                }
            }
        }
        if self.features.is_empty() {
            return Err(Error::InvalidConfig("at least one feature is required".into()));
        }
        for f in &self.features {
            f.distribution.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub row: usize,
    pub true_probability: f64,
    pub group: String,
    pub noise_flipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub dataset: TabularDataset,
    pub truth: Vec<TruthRow>,
    /// Calibrated intercept per group, in group order.
    pub intercepts: Vec<f64>,
}

impl SynthOutput {
    /// Sidecar CSV: row index, true probability, group, noise-flipped flag.
    pub fn write_truth_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "true_probability", "group", "noise_flipped"])?;
        for t in &self.truth {
            w.write_record([
                t.row.to_string(),
                t.true_probability.to_string(),
                t.group.clone(),
                u8::from(t.noise_flipped).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Group sizes by largest remainder, so realised shares are within one row.
pub fn allocate(n: usize, proportions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Intercept `b` with mean over rows of `(1 - 2r) * sigmoid(b + logit) + r` equal to `target`.
fn calibrate_intercept(logits: &[f64], noise: f64, target: f64) -> f64 {
    let observed = |b: f64| {
        let mean = logits.iter().map(|l| sigmoid(b + l)).sum::<f64>() / logits.len() as f64;
        (1.0 - 2.0 * noise) * mean + noise
    };
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if observed(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Deterministic in `config` (including its seed).
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let n = config.n_rows;

    let proportions: Vec<f64> = config.groups.iter().map(|g| g.proportion).collect();
    let mut codes: Vec<usize> = allocate(n, &proportions)
        .into_iter()
        .enumerate()
        .flat_map(|(g, count)| std::iter::repeat_n(g, count))
        .collect();
    codes.shuffle(&mut rng_from_seed(derive_seed(config.seed, stream::SYNTH_GROUPS)));

    let feature_seed = derive_seed(config.seed, stream::SYNTH_FEATURES);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(feature_seed, i as u64));
            config.features.iter().map(|f| f.distribution.sample(&mut rng)).collect()
        })
        .collect();

    let moments: Vec<(f64, f64)> = config
        .features
        .iter()
        .map(|f| (f.distribution.mean(), f.distribution.std()))
        .collect();
    let weights: Vec<Vec<f64>> = config
        .groups
        .iter()
        .map(|g| {
            config
                .features
                .iter()
                .map(|f| f.weight + g.coefficient_shifts.get(&f.name).copied().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let logits: Vec<f64> = rows
        .iter()
        .zip(&codes)
        .map(|(row, &g)| {
            row.iter()
                .zip(&moments)
                .zip(&weights[g])
                .map(|((x, (m, s)), w)| w * (x - m) / s)
                .sum()
        })
        .collect();

    let intercepts: Vec<f64> = config
        .groups
        .iter()
        .enumerate()
        .map(|(g, spec)| match spec.outcome_rate {
            Some(target) => {
                let group_logits: Vec<f64> = (0..n).filter(|&i| codes[i] == g).map(|i| logits[i]).collect();
                if group_logits.is_empty() {
                    config.intercept
                } else {
                    calibrate_intercept(&group_logits, spec.label_noise, target)
                }
            }
            None => config.intercept,
        })
        .collect();

    let label_seed = derive_seed(config.seed, stream::SYNTH_LABELS);
    let noise_seed = derive_seed(config.seed, stream::SYNTH_NOISE);
    let mut labels = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for i in 0..n {
        let g = codes[i];
        let p = sigmoid(intercepts[g] + logits[i]);
        let y = rng_from_seed(derive_seed(label_seed, i as u64)).random_bool(p);
        let noise = config.groups[g].label_noise;
        let flipped = noise > 0.0 && rng_from_seed(derive_seed(noise_seed, i as u64)).random_bool(noise);
        labels.push(y ^ flipped);
        truth.push(TruthRow {
            row: i,
            true_probability: p,
            group: config.groups[g].name.clone(),
            noise_flipped: flipped,
        });
    }

    let dataset = TabularDataset::new(config.features.iter().map(|f| f.name.clone()).collect(), rows, labels)?
        .with_groups(
            config.attribute.clone(),
            config.groups.iter().map(|g| g.name.clone()).collect(),
            &config.unspecified,
            codes,
        )?;
    Ok(SynthOutput {
        dataset,
        truth,
        intercepts,
    })
}

pub const PRESETS: [&str; 3] = ["operator1-like", "operator2-like", "null"];

/// Behavioural feature roster shared by the presets.
pub fn default_features() -> Vec<FeatureSpec> {
    let f = |name: &str, distribution, weight| FeatureSpec {
        name: name.to_string(),
        distribution,
        weight,
    };
    vec![
        f("bet_intensity", Distribution::LogNormal { mu: 0.0, sigma: 0.6 }, 1.6),
        f("deposit_frequency", Distribution::LogNormal { mu: 1.0, sigma: 0.5 }, 1.2),
        f("bet_volatility", Distribution::LogNormal { mu: -0.5, sigma: 0.5 }, 0.4),
        f("night_play_share", Distribution::Beta { alpha: 2.0, beta: 5.0 }, 0.8),
        f("withdrawal_ratio", Distribution::Beta { alpha: 2.0, beta: 2.0 }, -0.6),
    ]
}

fn group(name: &str, proportion: f64, outcome_rate: f64) -> GroupSpec {
    GroupSpec {
        name: name.into(),
        proportion,
        outcome_rate: Some(outcome_rate),
        label_noise: 0.0,
        coefficient_shifts: BTreeMap::new(),
    }
}

/// Named scenarios. The two operator presets reproduce the published group
/// shares and self-exclusion rates; `null` has no group effects at all.
pub fn preset(name: &str) -> Result<SynthConfig> {
    let base = |n_rows, groups| SynthConfig {
        n_rows,
        seed: 0,
        attribute: default_attribute(),
        label: default_label(),
        unspecified: "U".into(),
        groups,
        features: default_features(),
        intercept: 0.0,
    };
    match name {
        "operator1-like" => Ok(base(
            4340,
            vec![group("F", 0.206, 0.204), group("M", 0.326, 0.244), group("U", 0.468, 0.168)],
        )),
        "operator2-like" => {
            let mut m = group("M", 0.104, 0.187);
            m.coefficient_shifts.insert("bet_volatility".into(), 1.5);
            m.coefficient_shifts.insert("bet_intensity".into(), -0.75);
            m.label_noise = 0.02;
            Ok(base(18275, vec![group("F", 0.365, 0.171), m, group("U", 0.531, 0.223)]))
        }
        "null" => Ok(base(
            6000,
            vec![group("F", 0.45, 0.2), group("M", 0.45, 0.2), group("U", 0.10, 0.2)],
        )),
        other => Err(Error::InvalidConfig(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}
