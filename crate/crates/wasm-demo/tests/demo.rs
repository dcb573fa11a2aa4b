use fairlens_wasm::Demo;
use serde_json::Value;

fn demo() -> Demo {
    Demo::build("operator2-like", 3000, 5).unwrap()
}

#[test]
fn group_metrics_lists_findings_for_f_and_m() {
    let out: Value = serde_json::from_str(&demo().group_metrics_json(0.5, 0.02).unwrap()).unwrap();
    let groups: Vec<&str> = out["table"]["groups"].as_array().unwrap().iter().map(|g| g["group"].as_str().unwrap()).collect();
    assert_eq!(groups, ["F", "M", "U"]);
    let findings = out["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 2);
    for f in findings {
        assert_eq!(f["groups"], serde_json::json!(["F", "M"]));
        let disparity = f["disparity"].as_f64().unwrap();
        assert_eq!(f["exceeded"].as_bool().unwrap(), disparity > 0.02);
    }
}

#[test]
fn risk_curve_is_svg() {
    let d = demo();
    let svg = d.risk_curve("bet_intensity", 20).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.contains("bet_intensity"));
    assert!(d.risk_curve("no_such_feature", 20).is_err());
}

#[test]
fn mitigation_report_is_consistent() {
    let out: Value = serde_json::from_str(&demo().mitigation_json(50, 0.5).unwrap()).unwrap();
    let r = &out["report"];
    let before = r["baseline_disparity"].as_f64().unwrap();
    let after = r["intervention_disparity"].as_f64().unwrap();
    let verdict = r["verdict"].as_str().unwrap();
    assert_eq!(verdict == "improved", after < before, "{verdict} {before} {after}");
    assert!(out["excluded"].as_array().unwrap().is_empty());
    let members: Vec<&str> = out["members"].as_array().unwrap().iter().map(|m| m["group"].as_str().unwrap()).collect();
    assert_eq!(members, ["F", "M", "U"]);
}

#[test]
fn undersized_groups_are_merged() {
    // two thirds of 3000 rows leaves M with about 210 training rows
    let out: Value = serde_json::from_str(&demo().mitigation_json(400, 0.5).unwrap()).unwrap();
    let members = out["members"].as_array().unwrap();
    assert_eq!(members.len(), 2);
    assert_eq!(members[1]["group"], "U");
    assert_eq!(members[1]["merged"], serde_json::json!(["M"]));
}

#[test]
fn unknown_preset_fails() {
    assert!(Demo::build("nope", 1000, 1).is_err());
}
