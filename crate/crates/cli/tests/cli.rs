//! End-to-end runs of the `coframe` binary.

use std::process::{Command, Output};

fn coframe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coframe")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

/// CSV body as rows of fields, header dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn verify_hyperholomorphic_family_passes() {
    let out = coframe(&["verify", "--family", "tcp2_hyperholo", "--c", "1", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for e in entries {
        assert!(e["max_relative_residual"].as_f64().unwrap() <= 1e-9);
        assert_eq!(e["samples"], 400);
    }
}

#[test]
fn verify_all_families_passes() {
    let out = coframe(&["verify", "--all", "--c", "1", "--k", "2", "--theta", "0.5", "--grid", "60"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["entries"].as_array().unwrap().len() > 34);
    assert_eq!(v["params"]["tol"], 1e-9);
}

#[test]
fn verify_cone_lambert_family_as_csv() {
    let out = coframe(&["verify", "--family", "cone_bs_dspin7", "--C0", "1", "--C2", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("family,equation,max_relative_residual,pass,samples\n"));
    assert!(rows(&text).iter().all(|r| r[3] == "true"));
}

#[test]
fn unattainable_tolerance_fails_with_exit_one() {
    let out = coframe(&["verify", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn branches_of_first_implicit_family() {
    let out = coframe(&["branches", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--theta", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["branch_count_global"], 2);
    let ends: Vec<f64> = v["branches"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|b| b["global"] == true)
        .map(|b| b["value_end"].as_f64().unwrap())
        .collect();
    // one global branch decays like 6/r², the other grows like r²/2
    assert!(ends.iter().any(|e| e.abs() < 1e-3));
    assert!(ends.iter().any(|e| *e > 4e3));
}

#[test]
fn branches_flag_the_triple_boundary_root() {
    let theta = (0.75f64).atan().to_string();
    let out = coframe(&["branches", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--theta", &theta, "--format", "json"]);
    let v = json(&out);
    let roots = v["boundary_roots"].as_array().unwrap();
    assert!(roots.iter().any(|r| r["multiplicity"] == 3 && (r["value"].as_f64().unwrap() - 3.0).abs() < 1e-6));
}

#[test]
fn branches_of_second_implicit_family() {
    let theta = (2.0f64).atan().to_string();
    let out = coframe(&["branches", "--family", "tcp2_dhym_om2", "--c", "1", "--k", "1", "--theta", &theta]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["branch_count_global"], 4);
    let text = stdout(&out);
    assert!(text.starts_with("r,branch_id,value,global\n"));
}

#[test]
fn branches_rejects_closed_families() {
    let out = coframe(&["branches", "--family", "tcp2_hym_1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn phase_grid_regions() {
    let out = coframe(&["phase-grid"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let table = rows(&text);
    assert_eq!(table.len(), 441);
    let at = |a1: &str, a3: &str| table.iter().find(|r| r[0] == a1 && r[1] == a3).unwrap().clone();
    assert_eq!(at("0", "0")[3], "zero");
    assert_eq!(at("0", "1")[3], "negative");
    assert_eq!(at("0", "1")[2], "-1");
}

#[test]
fn ode_matches_lambert_overlay() {
    let out = coframe(&["ode", "--c", "0", "--k", "0", "--C0", "1", "--rmax", "50", "--grid", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("r,p,dp,lambert,lambert_deviation\n"));
    let table = rows(&text);
    assert_eq!(table.len(), 50);
    let worst = table.iter().map(|r| r[4].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "deviation {worst}");
}

#[test]
fn ode_starts_from_the_series_near_the_origin() {
    let out = coframe(&["ode", "--c", "1", "--k", "0.5", "--rmax", "0.05", "--grid", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("r,p,dp,series,series_deviation\n"));
    let table = rows(&text);
    assert_eq!(table[0][0], "0.001");
    for r in &table {
        assert!(r[4].parse::<f64>().unwrap() <= 1e-9);
    }
}

#[test]
fn unknown_family_exits_with_two() {
    for args in [&["verify", "--family", "nope"][..], &["ode", "--family", "nope"], &["branches", "--family", "nope"]] {
        let out = coframe(args);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    }
}

#[test]
fn invalid_grid_exits_with_two() {
    let out = coframe(&["verify", "--family", "eh_hym_1", "--rmin", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = coframe(&["verify", "--family", "eh_hym_1", "--grid", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_output_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("coframe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("a.csv"), dir.join("b.csv"));
    for path in [&a, &b] {
        let out = coframe(&["branches", "--family", "tcp2_dhym_om1", "--c", "1", "--k", "3", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    std::fs::remove_dir_all(&dir).unwrap();
}
