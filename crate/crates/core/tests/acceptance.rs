//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndslab::analysis::{pointwise_limit_profile, OmegaParams};
use ndslab::maps::compose;
use ndslab::scenario::{
    fixture_text, list_fixtures, parse_scenario, run_scenario_with, RunOptions, Scenario,
};
use ndslab::system::Gamma;
use ndslab::verify::{
    check_action, check_induced, check_kempf, check_periodic, check_split, check_uniap,
    find_fixed_point, Grid,
};
use ndslab::{Point, System};
use serde_json::Value;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn scenario(name: &str) -> Scenario {
    parse_scenario(fixture_text(name).expect("shipped fixture").as_bytes()).expect("fixture parses")
}

fn system(name: &str) -> System {
    scenario(name).system
}

fn grid101(sys: &System) -> Grid {
    Grid::uniform(sys.space(), 101).unwrap()
}

fn x(v: f64) -> Point {
    Point::scalar(v)
}

fn split_identity() -> Verdict {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut count = 0;
    for (name, _) in list_fixtures() {
        let sys = system(&name);
        let r = check_split(&sys, 8, 64, &grid101(&sys)).unwrap();
        count += 1;
        if !(r.passed && r.max_defect == 0.0) {
            bad.push(format!("{name} ({:e})", r.max_defect));
        }
    }
    let elapsed = start.elapsed();
    let ok = bad.is_empty() && elapsed < Duration::from_secs(10);
    verdict(
        ok,
        format!(
            "{count} fixtures, nonzero defects: {bad:?}, {:.2} s (limit 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn periodic_decomposition() -> Verdict {
    let sys = system("periodic_block");
    let r = check_periodic(&sys, 16, &grid101(&sys)).unwrap();
    let mut oracle = 0.3f64;
    for n in 1..=5 {
        oracle = if n % 2 == 1 {
            1.0 - oracle
        } else {
            oracle * oracle
        };
    }
    let (g, residues) = sys.periodic_reduce().unwrap();
    let reduced = residues[1]
        .eval(&g.eval(&g.eval(&x(0.3)).unwrap()).unwrap())
        .unwrap()
        .x();
    let direct = sys.iterate(&x(0.3), 5).unwrap().x();
    let ok = r.passed
        && r.max_defect == 0.0
        && (oracle - 0.7399).abs() <= 1e-12
        && (reduced - oracle).abs() <= 1e-12
        && (direct - oracle).abs() <= 1e-12;
    verdict(
        ok,
        format!(
            "defect {:e}, f_1^5(0.3) reduced {reduced:.17} direct {direct:.17} oracle {oracle:.17}",
            r.max_defect
        ),
    )
}

fn induced_identity() -> Verdict {
    let sys = system("periodic_block");
    let g = grid101(&sys);
    let linear = check_induced(&sys, &Gamma::Linear { linear: 2 }, 10, &g, 16).unwrap();
    let list = check_induced(&sys, &Gamma::List(vec![2, 3, 5, 8]), 10, &g, 16).unwrap();
    let additive = |r: &ndslab::verify::VerdictReport| r.details["gamma_additive"].as_bool();
    let ok = linear.passed
        && linear.max_defect == 0.0
        && list.passed
        && list.max_defect == 0.0
        && additive(&linear) == Some(true)
        && additive(&list) == Some(false);
    verdict(
        ok,
        format!(
            "2n: defect {:e} additive {:?}; (2,3,5,8): defect {:e} additive {:?}",
            linear.max_defect,
            additive(&linear),
            list.max_defect,
            additive(&list)
        ),
    )
}

fn star_vs_composition() -> Verdict {
    let sys = system("constant_family");
    let star = sys.star_iterate(1, 1).unwrap();
    let f11 = Arc::new(sys.iterate_map(1).unwrap());
    let comp = compose(vec![f11.clone(), f11]).unwrap();
    let mut worst_star = 0.0f64;
    let mut worst_comp = 0.0f64;
    for p in sys.space().grid(11).unwrap().iter() {
        worst_star = worst_star.max((star.eval(p).unwrap().x() - 1.0 / 3.0).abs());
        worst_comp = worst_comp.max((comp.eval(p).unwrap().x() - 0.5).abs());
    }
    verdict(
        worst_star <= 1e-15 && worst_comp <= 1e-15,
        format!("|star - 1/3| <= {worst_star:e}, |compose - 1/2| <= {worst_comp:e}"),
    )
}

fn uniform_asymptotic_inequality() -> Verdict {
    let sys = system("contraction");
    let r = check_uniap(&sys, &grid101(&sys), 200, 1e-2, 100).unwrap();
    let left: Vec<f64> = r.details["left"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let worst = left
        .iter()
        .enumerate()
        .map(|(i, l)| (l - 0.1 / (i as f64 + 3.0)).abs())
        .fold(0.0, f64::max);
    let margin = r.details["min_margin_with_slack"].as_f64().unwrap();
    let ok = left.len() == 200 && worst <= 1e-12 && r.passed && margin >= 0.0;
    verdict(
        ok,
        format!("max |left - 0.1/(n+2)| = {worst:e} over {} n, inequality defect {:e}, margin {margin:e}", left.len(), r.max_defect),
    )
}

fn kempf_invariance() -> Verdict {
    let contraction = system("kempf_contraction");
    let c = check_kempf(&contraction, &x(0.9), OmegaParams::default(), 5e-3).unwrap();
    let golden = system("rotation");
    let start = Instant::now();
    let params = OmegaParams {
        burn_in: 1000,
        keep: 100_000,
        eps: 1e-3,
    };
    let g = check_kempf(&golden, &x(0.0), params, 5e-3).unwrap();
    let elapsed = start.elapsed();
    let ok = c.max_defect == 0.0 && g.max_defect <= 2e-3 && elapsed < Duration::from_secs(5);
    verdict(
        ok,
        format!(
            "contraction defect {:e} (required exactly 0), golden defect {:e} (limit 2e-3) in {:.2} s",
            c.max_defect,
            g.max_defect,
            elapsed.as_secs_f64()
        ),
    )
}

fn fixed_point_in_omega() -> Verdict {
    let c = find_fixed_point(
        &system("kempf_contraction"),
        &x(0.9),
        OmegaParams::default(),
        1e-9,
    )
    .unwrap();
    let e = find_fixed_point(&system("example3"), &x(1.0), OmegaParams::default(), 1e-6).unwrap();
    let ok = c.residual <= 1e-9 && e.residual <= 1e-6 && e.point.x().abs() <= 1e-3;
    verdict(
        ok,
        format!(
            "contraction residual {:e} at {:.17}; example3 residual {:e} at {:e}",
            c.residual,
            c.point.x(),
            e.residual,
            e.point.x()
        ),
    )
}

fn example3_negative() -> Verdict {
    let ex3 = system("example3");
    let one = Grid::from_points(ex3.space(), vec![x(1.0)]).unwrap();
    let anchored = check_action(&ex3, &one, (1, 1), (8, 64), 1e-2).unwrap();
    let oracle = (8..=64)
        .map(|m| (0.5 - 1.0 / (m as f64 + 2.0)).abs())
        .fold(0.0, f64::max);
    let contraction = system("contraction");
    let tail = check_action(
        &contraction,
        &grid101(&contraction),
        (100, 200),
        (0, 2),
        1e-2,
    )
    .unwrap();
    let ok = !anchored.passed
        && anchored.max_defect >= 0.4
        && (anchored.max_defect - oracle).abs() <= 1e-12
        && tail.passed;
    verdict(
        ok,
        format!(
            "anchored defect {:.17} (oracle {oracle:.17}, passed {}); contraction tail defect {:e} (passed {})",
            anchored.max_defect, anchored.passed, tail.max_defect, tail.passed
        ),
    )
}

fn discontinuous_limit_profile() -> Verdict {
    let sys = system("power_family");
    let grid = sys.space().grid(101).unwrap();
    let prof = pointwise_limit_profile(&sys, &grid, 8, 2, 1e-3).unwrap();
    let mut worst_low = 0.0f64;
    let mut at_one = Vec::new();
    for (p, vals) in prof.grid.iter().zip(&prof.values) {
        if p.x() <= 0.99 {
            worst_low = vals.iter().map(|v| v.x().abs()).fold(worst_low, f64::max);
        } else if p.x() == 1.0 {
            at_one.extend(vals.iter().map(|v| v.x()));
        }
    }
    let ok = worst_low <= 1e-12
        && !at_one.is_empty()
        && at_one.iter().all(|&v| v == 1.0)
        && prof.max_jump >= 0.99;
    verdict(
        ok,
        format!(
            "max value for x <= 0.99: {worst_low:e}; values at 1: {at_one:?}; max_jump {:.17}",
            prof.max_jump
        ),
    )
}

fn run_report(name: &str, out: &Path) -> Value {
    let s = scenario(name);
    let opts = RunOptions {
        out_dir: Some(out.to_path_buf()),
        ..RunOptions::default()
    };
    run_scenario_with(&s, &opts).unwrap();
    let text = fs::read_to_string(out.join(name).join("00_check_conjugacy.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn conjugacy_transport() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let pos = run_report("conjugate_pair", dir.path());
    let neg = run_report("negative", dir.path());
    let num = |v: &Value, k: &str| v[k].as_f64().unwrap();
    let ok = pos["passed"] == Value::Bool(true)
        && num(&pos, "tolerance") == 1e-9
        && pos["config"]["n"] == 100
        && neg["passed"] == Value::Bool(false)
        && num(&neg, "max_defect") > 0.1;
    verdict(
        ok,
        format!(
            "conjugate pair defect {:e} at tol {:e}; swapped block defect {:.6} (passed {})",
            num(&pos, "max_defect"),
            num(&pos, "tolerance"),
            num(&neg, "max_defect"),
            neg["passed"]
        ),
    )
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "summary.json") {
                out.insert(
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_ndslab");
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let root = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for (threads, rep) in [(1, 0), (1, 1), (8, 0), (8, 1)] {
        let out = root.path().join(format!("t{threads}_r{rep}"));
        for (name, _) in list_fixtures() {
            let status = Command::new(bin)
                .arg("run")
                .arg(fixtures.join(format!("{name}.json")))
                .arg("--out")
                .arg(&out)
                .arg("--threads")
                .arg(threads.to_string())
                .env_remove("NDSLAB_OUT")
                .output()
                .unwrap()
                .status;
            assert!(
                status.code().is_some_and(|c| c == 0 || c == 1),
                "{name}: {status}"
            );
        }
        trees.push(read_tree(&out));
    }
    let files = trees[0].len();
    let mismatched: Vec<String> = trees[0]
        .keys()
        .filter(|k| trees[1..].iter().any(|t| t.get(*k) != trees[0].get(*k)))
        .map(|k| k.display().to_string())
        .collect();
    let same_sets = trees[1..].iter().all(|t| t.len() == files);
    verdict(
        files > 0 && same_sets && mismatched.is_empty(),
        format!(
            "{files} report files per run across {} fixtures, mismatches: {mismatched:?}",
            list_fixtures().len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("exact split identity", split_identity),
        ("exact periodic decomposition", periodic_decomposition),
        ("exact induced-system identity", induced_identity),
        ("star product vs composition", star_vs_composition),
        (
            "uniform-asymptotic inequality",
            uniform_asymptotic_inequality,
        ),
        ("limit invariance of omega-limit sets", kempf_invariance),
        ("fixed point in omega-limit set", fixed_point_in_omega),
        ("anchored action negative case", example3_negative),
        ("discontinuous limit profile", discontinuous_limit_profile),
        ("conjugacy transport", conjugacy_transport),
        ("determinism across runs and threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = std::panic::catch_unwind(run).unwrap_or_else(|_| verdict(false, "panicked"));
        if !v.ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
