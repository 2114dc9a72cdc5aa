//! End-to-end runs of the `floqlind` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn floqlind(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floqlind"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FLOQLIND_OUT")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn ep_fig1_writes_first_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = floqlind(&["ep", "--preset", "fig1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("ep_fig1.csv"));
    assert_eq!(header, ["index", "t", "gamma", "gap", "period", "t_closed_form"]);
    let t = column(&header, &rows, "t");
    assert!((t[0] - 60.00).abs() < 5e-3 && (t[1] - 65.66).abs() < 5e-3, "{t:?}");
    for name in ["ep_fig1.json", "ep_fig1.svg", "ep_fig1.manifest"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let manifest = std::fs::read_to_string(dir.path().join("ep_fig1.manifest")).unwrap();
    assert!(manifest.contains("# workers = 1") && manifest.contains("command = ep"));
}

#[test]
fn evolve_columns_and_monotone_norm() {
    let dir = tempfile::tempdir().unwrap();
    let out = floqlind(&["evolve", "--preset", "fig1", "--format", "csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("evolve_fig1.csv"));
    assert_eq!(
        header,
        [
            "t",
            "rx",
            "ry",
            "rz",
            "bloch_norm",
            "purity",
            "trace_distance",
            "adiabatic_norm",
            "complex_flag",
            "inversion"
        ]
    );
    let norm = column(&header, &rows, "bloch_norm");
    assert!(norm.windows(2).all(|w| w[1] <= w[0] + 1e-7));
    // Only the requested format is written.
    assert!(!dir.path().join("evolve_fig1.json").exists());
}

#[test]
fn floquet_json_round_trips_and_ipr_plots_bulk() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["floquet", "ipr"] {
        let out = floqlind(&[cmd, "--preset", "fig3a", "--m-max", "40"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(dir.path().join("floquet_fig3a.json")).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["schema"], 1);
    let eig = v["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 3 * 81);
    assert_eq!(v["ipr"].as_array().unwrap().len(), eig.len());
    assert_eq!(v["ladder_id"].as_array().unwrap().len(), eig.len());
    // The CSV and JSON carry the same doubles bit for bit.
    let (header, rows) = read_csv(&dir.path().join("floquet_fig3a.csv"));
    let re = column(&header, &rows, "re");
    let im = column(&header, &rows, "im");
    for (k, z) in eig.iter().enumerate() {
        assert_eq!(z[0].as_f64().unwrap().to_bits(), re[k].to_bits());
        assert_eq!(z[1].as_f64().unwrap().to_bits(), im[k].to_bits());
    }
    // Re-serializing reproduces the file.
    assert_eq!(serde_json::to_string_pretty(&v).unwrap() + "\n", text);

    let edges = v["ladder_id"].as_array().unwrap().iter().filter(|l| *l == "edge").count();
    let svg = std::fs::read_to_string(dir.path().join("ipr_fig3a.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), eig.len() - edges);
    assert!(!svg.contains("href"));
}

#[test]
fn validation_error_exits_two_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "command = evolve\n[params]\ngamma0 = -1\n").unwrap();
    let out = floqlind(&["evolve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "validation");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().unwrap().contains("gamma0"));
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "command = ep\n[numeric]\nrtoll = 1e-9\n").unwrap();
    let out = floqlind(&["ep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "parse");
    assert!(err["message"].as_str().unwrap().contains("rtoll"));
}

#[test]
fn compute_error_exits_one() {
    // Below threshold there are no exceptional points to report.
    let dir = tempfile::tempdir().unwrap();
    let out = floqlind(&["ep", "--preset", "fig1", "--set", "params.gamma0=0.01"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(err["kind"], "compute");
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = floqlind(&["oracle-check", "--seed", "3", "--set", "numeric.samples=10"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle-check_fig1.json")).unwrap()).unwrap();
    assert_eq!(v["all_passed"], true);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_floqlind"))
        .args(["ep", "--preset", "fig1", "--format", "csv"])
        .env("FLOQLIND_OUT", &target)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(target.join("ep_fig1.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        for args in [["evolve", "--preset", "fig1"], ["adiabatic", "--preset", "fig1"], ["oracle-check", "--seed", "11"]] {
            let mut v = args.to_vec();
            v.extend(["--set", "numeric.samples=5"]);
            assert!(floqlind(&v, dir.path()).status.success());
        }
    }
    for name in [
        "evolve_fig1.csv",
        "evolve_fig1.json",
        "adiabatic_fig1.csv",
        "adiabatic_fig1.json",
        "oracle-check_fig1.csv",
        "oracle-check_fig1.json",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
}
