use std::fs;

use ndslab::report::fmt_real;
use ndslab::scenario::{
    fixture_text, list_fixtures, parse_scenario, run_scenario_with, RunOptions,
};
use proptest::prelude::*;
use serde_json::Value;

proptest! {
    #[test]
    fn reals_round_trip(x in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = fmt_real(x);
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
        let parsed: f64 = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(parsed.to_bits(), x.to_bits());
    }
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn every_check_report_has_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..RunOptions::default()
    };
    let mut checks = 0;
    for (name, _) in list_fixtures() {
        let s = parse_scenario(fixture_text(&name).unwrap().as_bytes()).unwrap();
        let summary = run_scenario_with(&s, &opts).unwrap();
        assert_eq!(summary.tasks.len(), s.tasks().len());
        for t in &summary.tasks {
            let path = dir.path().join(&name).join(&t.artifacts[0]);
            let r: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            assert_eq!(r["schema"], Value::from(1));
            assert_eq!(r["task"], Value::from(t.task.as_str()));
            if r["kind"] != "check" {
                continue;
            }
            checks += 1;
            for key in [
                "check",
                "passed",
                "max_defect",
                "tolerance",
                "series_csv_path",
                "config",
            ] {
                assert!(r.get(key).is_some(), "{}: missing {key}", path.display());
            }
            let max_defect = r["max_defect"].as_f64().unwrap();
            let tolerance = r["tolerance"].as_f64().unwrap();
            assert_eq!(
                r["passed"].as_bool().unwrap(),
                max_defect <= tolerance,
                "{}",
                path.display()
            );
            let status = serde_json::to_value(t.status).unwrap();
            let expected = if r["passed"] == Value::Bool(true) {
                "passed"
            } else {
                "failed"
            };
            assert_eq!(status, Value::from(expected));
            if let Some(csv) = r["series_csv_path"].as_str() {
                let (header, rows) =
                    parse_csv(&fs::read_to_string(dir.path().join(&name).join(csv)).unwrap());
                assert_eq!(header, ["n", "defect"]);
                let series_max = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
                assert_eq!(series_max, max_defect, "{}", path.display());
            }
        }
    }
    assert!(checks >= 20);
}

#[test]
fn trajectory_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..RunOptions::default()
    };
    let s = parse_scenario(fixture_text("periodic_block").unwrap().as_bytes()).unwrap();
    run_scenario_with(&s, &opts).unwrap();
    let (header, rows) = parse_csv(
        &fs::read_to_string(dir.path().join("periodic_block/00_trajectory.csv")).unwrap(),
    );
    assert_eq!(header, ["n", "x0"]);
    let xs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let ns: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(ns, [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    let expected = [
        0.3,
        1.0 - 0.3,
        0.7 * 0.7,
        1.0 - 0.49,
        0.51 * 0.51,
        1.0 - 0.51 * 0.51,
    ];
    for (a, b) in xs.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for threads in [1, 3] {
        let out = dir.path().join(format!("t{threads}"));
        let opts = RunOptions {
            out_dir: Some(out.clone()),
            threads: Some(threads),
            ..RunOptions::default()
        };
        let s = parse_scenario(fixture_text("rotation").unwrap().as_bytes()).unwrap();
        let summary = run_scenario_with(&s, &opts).unwrap();
        let files: Vec<String> = summary
            .tasks
            .iter()
            .flat_map(|t| t.artifacts.iter())
            .map(|a| fs::read_to_string(out.join("rotation").join(a)).unwrap())
            .collect();
        bodies.push(files);
    }
    assert_eq!(bodies[0], bodies[1]);
}
