//! End-to-end runs of the `fairlens` binary on small configurations.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairlens::ledger::{load_ledger, save_ledger, AuditLedger};
use serde_json::{json, Value};
use tempfile::TempDir;

fn fairlens(args: &[&str]) -> Output {
    fairlens_env(args, None)
}

fn fairlens_env(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairlens"));
    cmd.args(args).env_remove("FAIRLENS_SEED");
    if let Some(s) = seed_env {
        cmd.env("FAIRLENS_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_config(preset: &str, seed: u64) -> Value {
    json!({
        "seed": seed,
        "dataset": { "source": "synth", "preset": preset, "n_rows": 800 },
        "model": { "n_trees": 10, "max_depth": 6, "min_leaf": 5, "feature_fraction": 0.5 },
        "scope": { "model": "test model", "justification": "small fixture" },
        "audit": { "folds": 5, "indirect": { "enabled": false, "folds": 5, "uplift_threshold": 0.05 } },
        "explain": { "features": ["bet_intensity"], "points": 20 }
    })
}

fn write_config(dir: &Path, name: &str, config: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs `audit` and returns the ledger path.
fn audit(dir: &Path, config: &Value) -> PathBuf {
    let cfg = write_config(dir, "config.json", config);
    let ledger = dir.join("ledger.json");
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&ledger)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    ledger
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"seed\": 1,\n  \"dataset\": oops\n}\n").unwrap();
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&dir.path().join("l.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    assert!(!dir.path().join("l.json").exists());
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut config = small_config("null", 1);
    config["audit"]["tolerence"] = json!({});
    let cfg = write_config(dir.path(), "c.json", &config);
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&dir.path().join("l.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("tolerence"), "{}", stderr(&out));
}

#[test]
fn missing_ledger_exits_one() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.json");
    for sub in ["mitigate", "explain", "report"] {
        let out = fairlens(&[sub, "--ledger", s(&missing)]);
        assert_eq!(code(&out), 1, "{sub}");
        assert!(stderr(&out).contains("does not exist"), "{sub}: {}", stderr(&out));
    }
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(code(&fairlens(&["frobnicate"])), 1);
    assert_eq!(code(&fairlens(&["audit"])), 1);
    assert_eq!(code(&fairlens(&["--help"])), 0);
    assert_eq!(code(&fairlens(&["--version"])), 0);
}

#[test]
fn report_on_empty_ledger_lists_every_step() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.json");
    let mut ledger = AuditLedger::empty("fl-empty", 3);
    save_ledger(&mut ledger, &path).unwrap();
    let out = fairlens(&["report", "--ledger", s(&path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let md = String::from_utf8(out.stdout).unwrap();
    for step in 1..=6 {
        assert!(md.contains(&format!("## Step {step}")), "step {step} heading missing:\n{md}");
    }
    assert!(md.matches(fairlens::ledger::PENDING).count() >= 6, "{md}");
}

#[test]
fn fail_on_bias_follows_the_findings() {
    let dir = TempDir::new().unwrap();
    // A near-zero configured half-width marks every non-zero disparity.
    let mut strict = small_config("null", 4);
    strict["audit"]["tolerance"] = json!({ "mode": "configured", "half_width": 1e-9 });
    let cfg = write_config(dir.path(), "strict.json", &strict);
    let ledger = dir.path().join("strict-ledger.json");
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&ledger), "--fail-on-bias"]);
    let l = load_ledger(&ledger).unwrap();
    assert!(l.step4_findings.as_ref().unwrap().any_exceeded);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("EXCEEDED"));

    // Without the flag the same audit succeeds.
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&ledger)]);
    assert_eq!(code(&out), 0);

    let mut loose = small_config("null", 4);
    loose["audit"]["tolerance"] = json!({ "mode": "configured", "half_width": 0.9 });
    let cfg = write_config(dir.path(), "loose.json", &loose);
    let out = fairlens(&["audit", "--config", s(&cfg), "--ledger", s(&ledger), "--fail-on-bias"]);
    assert!(!load_ledger(&ledger).unwrap().step4_findings.unwrap().any_exceeded);
    assert_eq!(code(&out), 0);
}

#[test]
fn verify_accepts_an_untouched_ledger() {
    let dir = TempDir::new().unwrap();
    let ledger = audit(dir.path(), &small_config("null", 2));
    let out = fairlens(&["report", "--ledger", s(&ledger), "--verify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("reproduces"));
}

#[test]
fn verify_catches_an_edited_finding() {
    let dir = TempDir::new().unwrap();
    let ledger = audit(dir.path(), &small_config("null", 2));

    // Edited by hand: the section hash no longer matches.
    let mut value: Value = serde_json::from_str(&std::fs::read_to_string(&ledger).unwrap()).unwrap();
    let d = &mut value["step4_findings"]["findings"][0]["disparity"];
    *d = json!(d.as_f64().unwrap() + 0.01);
    std::fs::write(&ledger, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    let out = fairlens(&["report", "--ledger", s(&ledger), "--verify"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("step4_findings"), "{}", stderr(&out));

    // Resealed so the hashes agree: recomputation still disagrees.
    let mut l = load_ledger(&ledger).unwrap();
    save_ledger(&mut l, &ledger).unwrap();
    let out = fairlens(&["report", "--ledger", s(&ledger), "--verify"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("step4_findings.findings[0].disparity"), "{err}");
    assert!(!err.contains("tampered"), "{err}");
}

#[test]
fn seed_flag_beats_env_beats_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_config("null", 11));
    let ledger = dir.path().join("l.json");
    let seed_of = |args: &[&str], env: Option<&str>| {
        let mut all = vec!["audit", "--config", s(&cfg), "--ledger", s(&ledger)];
        all.extend_from_slice(args);
        let out = fairlens_env(&all, env);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        load_ledger(&ledger).unwrap().seed
    };
    assert_eq!(seed_of(&[], None), 11);
    assert_eq!(seed_of(&[], Some("22")), 22);
    assert_eq!(seed_of(&["--seed", "33"], Some("22")), 33);
    assert_eq!(code(&fairlens_env(&["audit", "--config", s(&cfg), "--ledger", s(&ledger)], Some("x"))), 1);
}

#[test]
fn synth_output_audits_as_a_csv_source() {
    let dir = TempDir::new().unwrap();
    let data_dir = dir.path().join("data");
    let out = fairlens(&["synth", "--preset", "operator2-like", "--seed", "5", "--out", s(&data_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let dataset = data_dir.join("dataset.csv");
    let truth = std::fs::read_to_string(data_dir.join("truth.csv")).unwrap();
    let text = std::fs::read_to_string(&dataset).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.ends_with("self_excluded,gender"), "{header}");
    assert_eq!(text.lines().count(), truth.lines().count());

    // Same seed, same bytes.
    let again = dir.path().join("again");
    fairlens(&["synth", "--preset", "operator2-like", "--seed", "5", "--out", s(&again)]);
    assert_eq!(std::fs::read(again.join("dataset.csv")).unwrap(), text.as_bytes());

    let mut config = small_config("null", 5);
    config["dataset"] = json!({
        "source": "csv",
        "path": dataset,
        "roles": { "label": "self_excluded", "group": "gender", "categories": ["F", "M", "U"] }
    });
    let ledger = audit(dir.path(), &config);
    let l = load_ledger(&ledger).unwrap();
    let p = l.provenance.as_ref().unwrap();
    assert_eq!(p.dataset.n_rows, text.lines().count() - 1);
    assert!(l.step4_findings.is_some());
    let out = fairlens(&["report", "--ledger", s(&ledger), "--verify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn explain_writes_requested_formats_and_verifies() {
    let dir = TempDir::new().unwrap();
    let cfg_value = small_config("operator2-like", 8);
    let cfg = write_config(dir.path(), "config.json", &cfg_value);
    let model_dir = dir.path().join("model");
    let out = fairlens(&["train", "--config", s(&cfg), "--out", s(&model_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ledger = audit(dir.path(), &cfg_value);

    let curves = dir.path().join("curves");
    let out = fairlens(&[
        "explain",
        "--ledger",
        s(&ledger),
        "--model",
        s(&model_dir.join("model.json")),
        "--out",
        s(&curves),
        "--format",
        "svg",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut names: Vec<String> = std::fs::read_dir(&curves)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["risk_curve_bet_intensity.svg"]);
    assert!(std::fs::read_to_string(curves.join(&names[0])).unwrap().starts_with("<svg"));
    assert_eq!(load_ledger(&ledger).unwrap().explainability_entries.len(), 1);

    // A second run replaces the entry rather than adding one.
    let out = fairlens(&["explain", "--ledger", s(&ledger), "--out", s(&curves), "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(load_ledger(&ledger).unwrap().explainability_entries.len(), 1);
    assert!(curves.join("risk_curve_bet_intensity.csv").exists());

    let out = fairlens(&["explain", "--ledger", s(&ledger), "--format", "md"]);
    assert_eq!(code(&out), 1);

    let out = fairlens(&["report", "--ledger", s(&ledger), "--verify", "--format", "json", "--out", s(dir.path())]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.path().join("ledger.json").exists());
}

#[test]
fn mitigate_appends_a_plan_without_touching_findings() {
    let dir = TempDir::new().unwrap();
    let ledger = audit(dir.path(), &small_config("operator2-like", 6));
    let before = load_ledger(&ledger).unwrap();
    let out = fairlens(&["mitigate", "--ledger", s(&ledger)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("adopted:"));
    let after = load_ledger(&ledger).unwrap();
    assert!(after.step5_plan.is_some());
    for key in ["step1_scope", "step2_categories", "step3_metrics", "step4_findings"] {
        assert_eq!(before.section_hashes[key], after.section_hashes[key], "{key}");
    }
    let out = fairlens(&["report", "--ledger", s(&ledger)]);
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.contains("## Step 5"));
}
