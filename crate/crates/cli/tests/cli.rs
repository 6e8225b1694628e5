use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cspf_core::params::ParamsFile;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn cspf(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cspf")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) {
    let out = cspf(args, cwd);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn synth(cwd: &Path, spec: &str, dir: &str) {
    ok(&["synth", "--spec", fixture(spec).to_str().unwrap(), "--out", dir], cwd);
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn assess_writes_timeline_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    synth(cwd, "stop_and_go.json", "sg");
    std::fs::write(cwd.join("ext.csv"), "frame,value\n0,0.5\n10,0.25\n").unwrap();
    ok(&["assess", "--input", "sg", "--vehicle", "2", "--no-lane-terms", "--out", "tl.csv", "--baseline", "ext.csv"], cwd);
    let (header, rows) = read_csv(&cwd.join("tl.csv"));
    assert_eq!(
        header,
        ["frame", "t", "s_risk", "o_risk", "ttci", "top_pair_id", "pair_s", "pair_o", "t_m", "d_m", "baseline"]
    );
    assert_eq!(rows.len(), 1000);
    assert_eq!(rows[0][10], "0.5");
    assert_eq!(rows[1][10], "");
    assert_eq!(rows[10][10], "0.25");
    assert!(rows.iter().all(|r| r[5] == "1"));
    let peak = rows.iter().map(|r| r[3].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(peak > 0.7 && peak <= 1.0, "{peak}");

    let out = cspf(&["assess", "--input", "sg", "--vehicle", "99", "--out", "x.csv"], cwd);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("vehicle 99"));
}

#[test]
fn analyze_braking_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    synth(cwd, "stop_and_go.json", "sg");
    ok(&["analyze", "--input", "sg", "--study", "braking", "--thresholds", "0.3,0.5,0.7", "--no-lane-terms", "--out", "h.json"], cwd);
    let hist: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cwd.join("h.json")).unwrap()).unwrap();
    assert_eq!(hist["study"], "braking");
    assert_eq!(hist["quantity"], "longitudinal_acceleration");
    let dists = hist["distributions"].as_array().unwrap();
    assert_eq!(dists.len(), 3);
    for d in dists {
        let values = d["values"].as_array().unwrap();
        assert!(!values.is_empty());
        assert!(d["mean"].as_f64().unwrap() < 0.0);
        let counted: u64 = d["bins"].as_array().unwrap().iter().map(|b| b["count"].as_u64().unwrap()).sum();
        assert_eq!(counted as usize, values.len());
        assert_eq!(d["samples"].as_array().unwrap().len(), values.len());
    }

    ok(&["synth", "--spec", fixture("lateral_drift.json").to_str().unwrap(), "--out", "ld"], cwd);
    ok(&["analyze", "--input", "ld", "--study", "lateral-s", "--thresholds", "0.3", "--out", "l.json"], cwd);
    let hist: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cwd.join("l.json")).unwrap()).unwrap();
    let sides: Vec<&str> = hist["distributions"].as_array().unwrap().iter().map(|d| d["direction"].as_str().unwrap()).collect();
    assert_eq!(sides, ["lateral_left", "lateral_right"]);
    assert_eq!(hist["quantity"], "lateral_velocity");

    let out = cspf(&["analyze", "--input", "sg", "--study", "braking", "--thresholds", "0.7,0.3", "--out", "bad.json"], cwd);
    assert!(!out.status.success());
}

#[test]
fn render_field_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    ok(&["render-field", "--field", "s", "--velocity", "20", "--extent", "100x20", "--res", "0.25", "--out", "s.csv"], cwd);
    let (header, rows) = read_csv(&cwd.join("s.csv"));
    assert_eq!(header, ["x", "y", "risk"]);
    assert_eq!(rows.len(), 401 * 81);
    let at = |x: &str, y: &str| rows.iter().find(|r| r[0] == x && r[1] == y).unwrap()[2].parse::<f64>().unwrap();
    assert_eq!(at("0", "0"), 1.0);
    assert_eq!(at("10", "3"), at("10", "-3"));

    ok(&["render-field", "--field", "o", "--velocity", "20", "--other", "30,0,15,0,1.8", "--extent", "60x10", "--res", "1", "--out", "o.csv"], cwd);
    let (_, rows) = read_csv(&cwd.join("o.csv"));
    assert_eq!(rows.len(), 61 * 11);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[2].parse::<f64>().unwrap())));

    assert!(!cspf(&["render-field", "--field", "o", "--velocity", "20", "--out", "x.csv"], cwd).status.success());
    assert!(!cspf(&["render-field", "--field", "s", "--velocity", "20", "--extent", "100", "--out", "x.csv"], cwd).status.success());
}

#[test]
fn calibrate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    synth(cwd, "calibration.json", "cal");
    let args = |out: &str| {
        vec!["calibrate", "--input", "cal", "--seed", "3", "--min-samples", "500", "--iterations", "2", "--out"]
            .into_iter()
            .chain([out])
            .map(String::from)
            .collect::<Vec<_>>()
    };
    for out in ["a.json", "b.json"] {
        let a = args(out);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>(), cwd);
    }
    let a = std::fs::read(cwd.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(cwd.join("b.json")).unwrap());
    assert_eq!(std::fs::read(cwd.join("a_bins.csv")).unwrap(), std::fs::read(cwd.join("b_bins.csv")).unwrap());

    let params = ParamsFile::load(&cwd.join("a.json")).unwrap();
    assert_eq!(params.o_field, ParamsFile::default().o_field);
    let (header, rows) = read_csv(&cwd.join("a_bins.csv"));
    assert_eq!(&header[..4], ["velocity", "status", "n_samples", "n_vehicles"]);
    assert!(header.contains(&"std_gamma_x".to_string()));
    assert_eq!(rows.iter().filter(|r| r[1] == "fitted" || r[1] == "not_converged").count(), 4);
}
