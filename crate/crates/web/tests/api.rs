use ndslab_web::api::{fixtures_json, limit_profile_json, omega_limit_json, trajectory_json};
use serde_json::Value;

const CONTRACTION: &str = r#"{
    "space": {"kind": "interval", "lo": 0, "hi": 1},
    "sequence": {"rule": "family", "family": {"name": "affine_drift", "a": 0.5, "b": 0.25, "c": 0.1}}
}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn fixture_system(name: &str) -> String {
    let all = parse(&fixtures_json());
    let item = all
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == name)
        .unwrap();
    item["system"].to_string()
}

#[test]
fn fixtures_carry_buildable_systems() {
    let all = parse(&fixtures_json());
    let items = all.as_array().unwrap();
    assert!(items.len() >= 9);
    for item in items {
        let r = trajectory_json(&item["system"].to_string(), &[0.0], 3);
        assert!(r.is_ok(), "{}: {r:?}", item["name"]);
    }
}

#[test]
fn trajectory_of_constant_family() {
    let out = parse(&trajectory_json(&fixture_system("constant_family"), &[1.0], 4).unwrap());
    let xs: Vec<f64> = out["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    assert_eq!(xs, [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2]);
}

#[test]
fn omega_limit_of_contraction() {
    let out = parse(&omega_limit_json(CONTRACTION, &[0.9], 1000, 10_000, 1e-3).unwrap());
    assert_eq!(out["count"], 1);
    assert!((out["centers"][0][0].as_f64().unwrap() - 0.5).abs() < 1e-3);
}

#[test]
fn limit_profile_of_power_family() {
    let out = parse(&limit_profile_json(&fixture_system("power_family"), 8, 2, 101).unwrap());
    assert!(out["max_jump"].as_f64().unwrap() >= 0.99);
    assert_eq!(out["values"][100][0], 1.0);
    assert!(out["values"][50][0].as_f64().unwrap() < 1e-12);
}

#[test]
fn errors_are_messages() {
    assert!(trajectory_json("{", &[0.5], 3)
        .unwrap_err()
        .contains("system"));
    assert!(trajectory_json(CONTRACTION, &[2.0], 3).is_err());
    assert!(trajectory_json(CONTRACTION, &[0.5], 10_000_000)
        .unwrap_err()
        .contains("capped"));
    assert!(limit_profile_json(&fixture_system("rotation"), 8, 2, 11).is_ok());
}
