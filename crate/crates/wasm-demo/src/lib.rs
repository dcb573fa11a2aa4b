//! Browser demo: audit a forest trained on synthetic player data.
//!
//! `Demo` generates a preset, holds out a third of the rows and trains the
//! pooled model once; each exported method then runs one operation against
//! the held-out rows and returns JSON (or SVG) for the page to show.

use fairlens::audit::{evaluate_bias, group_metrics_from_scores, MetricName, ToleranceThreshold};
use fairlens::curves::{balance_eval_set, feature_risk_curve, render_svg};
use fairlens::mitigation::{train_blind_separate, InterventionReport};
use fairlens::model::{stratified_folds, train_random_forest, ForestParams, RandomForestModel, RowScorer, TabularDataset};
use fairlens::synth::{generate, preset};
use serde_json::json;
use wasm_bindgen::prelude::*;

const GROUPS: [&str; 2] = ["F", "M"];

fn demo_params() -> ForestParams {
    ForestParams {
        n_trees: 20,
        max_depth: 8,
        ..ForestParams::default()
    }
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub struct Demo {
    seed: u64,
    train: TabularDataset,
    test: TabularDataset,
    model: RandomForestModel,
    baseline_scores: Vec<f64>,
}

impl Demo {
    pub fn build(preset_name: &str, n_rows: usize, seed: u64) -> fairlens::Result<Demo> {
        let mut cfg = preset(preset_name)?;
        cfg.n_rows = n_rows;
        cfg.seed = seed;
        let data = generate(&cfg)?.dataset;
        let folds = stratified_folds(data.labels(), 3, seed)?;
        let test_rows = &folds[0];
        let mut held_out = vec![false; data.n_rows()];
        for &r in test_rows {
            held_out[r] = true;
        }
        let train_rows: Vec<usize> = (0..data.n_rows()).filter(|&r| !held_out[r]).collect();
        let train = data.subset(&train_rows);
        let test = data.subset(test_rows);
        let model = train_random_forest(&train, &demo_params(), seed)?;
        let baseline_scores = model.score_all(&test);
        Ok(Demo {
            seed,
            train,
            test,
            model,
            baseline_scores,
        })
    }

    pub fn group_metrics_json(&self, threshold: f64, half_width: f64) -> fairlens::Result<String> {
        let table = group_metrics_from_scores(&self.test, &self.baseline_scores, threshold)?;
        let thresholds = [
            ToleranceThreshold::configured(MetricName::Tpr, half_width)?,
            ToleranceThreshold::configured(MetricName::Tnr, half_width)?,
        ];
        let findings = evaluate_bias(&table, &thresholds, &GROUPS)?;
        Ok(json!({ "table": table, "findings": findings }).to_string())
    }

    pub fn risk_curve(&self, feature: &str, points: usize) -> fairlens::Result<String> {
        let eval = balance_eval_set(&self.test, self.seed)?;
        Ok(render_svg(&feature_risk_curve(&self.model, &eval, feature, points)?))
    }

    pub fn mitigation_json(&self, min_support: usize, threshold: f64) -> fairlens::Result<String> {
        let ensemble = train_blind_separate(&self.train, &demo_params(), self.seed, min_support)?;
        let scores = ensemble.score_all(&self.test);
        let before = group_metrics_from_scores(&self.test, &self.baseline_scores, threshold)?;
        let after = group_metrics_from_scores(&self.test, &scores, threshold)?;
        let report = InterventionReport::from_tables("blind-separate ensemble", &before, &after, MetricName::Tpr, &GROUPS)?;
        let members: Vec<_> = ensemble
            .members()
            .iter()
            .map(|m| json!({ "group": m.group, "rows": m.rows, "merged": m.merged }))
            .collect();
        Ok(json!({ "report": report, "members": members, "excluded": ensemble.excluded() }).to_string())
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(preset_name: &str, n_rows: usize, seed: u64) -> Result<Demo, JsValue> {
        Demo::build(preset_name, n_rows, seed).map_err(js_err)
    }

    #[wasm_bindgen(js_name = featureNames)]
    pub fn feature_names(&self) -> Vec<String> {
        self.test.feature_names().to_vec()
    }

    /// Per-group metrics on held-out rows plus F vs M findings at ±`half_width`.
    #[wasm_bindgen(js_name = groupMetrics)]
    pub fn group_metrics(&self, threshold: f64, half_width: f64) -> Result<String, JsValue> {
        self.group_metrics_json(threshold, half_width).map_err(js_err)
    }

    /// SVG risk curve for one feature over a balanced held-out set.
    #[wasm_bindgen(js_name = riskCurveSvg)]
    pub fn risk_curve_svg(&self, feature: &str, points: usize) -> Result<String, JsValue> {
        self.risk_curve(feature, points).map_err(js_err)
    }

    /// Blind-separate ensemble against the pooled model on held-out rows.
    #[wasm_bindgen]
    pub fn mitigation(&self, min_support: usize, threshold: f64) -> Result<String, JsValue> {
        self.mitigation_json(min_support, threshold).map_err(js_err)
    }
}
