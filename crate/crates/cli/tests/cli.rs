use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const RECIPES: [&str; 9] = [
    "christoffel",
    "divergence",
    "antisym-div",
    "density-cov",
    "transform",
    "killing",
    "current",
    "gauss-check",
    "mass",
];

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn grcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grcalc")).args(args).output().unwrap()
}

fn run_config(path: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    grcalc(&args)
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Write `text` as a config file in a fresh temp dir.
fn temp_config(text: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, text).unwrap();
    (dir, path)
}

fn edited(name: &str, from: &str, to: &str) -> String {
    let text = std::fs::read_to_string(config(name)).unwrap();
    assert!(text.contains(from), "{name} has no `{from}`");
    text.replacen(from, to, 1)
}

#[test]
fn every_example_config_passes_with_tagged_reports() {
    for recipe in RECIPES {
        let out = run_config(&config(recipe), &[]);
        assert_eq!(out.status.code(), Some(0), "{recipe}: {}", String::from_utf8_lossy(&out.stderr));
        let lines = lines(&out);
        assert!(!lines.is_empty(), "{recipe}");
        for l in &lines {
            assert_eq!(l["recipe"], recipe);
            assert!(l["eq"].as_str().is_some_and(|s| !s.is_empty()), "{recipe}: {l}");
            if let Some(pass) = l.get("pass") {
                assert_eq!(pass, true, "{recipe}: {l}");
            }
        }
        assert!(String::from_utf8_lossy(&out.stderr).contains("checks passed"));
    }
}

#[test]
fn minkowski_connection_is_zero() {
    let out = run_config(&config("christoffel"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let lines = lines(&out);
    assert!(lines.iter().all(|l| l["check"] != "christoffel"));
    let count = lines.iter().find(|l| l["check"] == "christoffel_count").unwrap();
    assert_eq!(count["nonzero"], 0);
}

#[test]
fn schwarzschild_connection_is_tabulated() {
    let text = edited("divergence", "recipe = \"divergence\"", "recipe = \"christoffel\"");
    let (_dir, path) = temp_config(&text);
    let out = run_config(&path, &[]);
    assert_eq!(out.status.code(), Some(0));
    let lines = lines(&out);
    // Gamma^t_tr, Gamma^r_tt, Gamma^r_rr, Gamma^r_thth, Gamma^r_phph, Gamma^th_rth,
    // Gamma^th_phph, Gamma^ph_rph, Gamma^ph_thph
    let count = lines.iter().find(|l| l["check"] == "christoffel_count").unwrap();
    assert_eq!(count["nonzero"], 9);
}

#[test]
fn schwarzschild_time_translation_is_killing() {
    let out = run_config(&config("killing"), &[]);
    assert_eq!(out.status.code(), Some(0));
    let residual = lines(&out).into_iter().find(|l| l["check"] == "killing_residual").unwrap();
    assert!(residual["value"].as_f64().unwrap() <= 1e-10);
    assert_eq!(residual["eq"], "30");
}

#[test]
fn non_killing_vector_fails_numerically() {
    let text = edited("killing", "killing = [\"1\", \"0\", \"0\", \"0\"]", "killing = [\"0\", \"r\", \"0\", \"0\"]");
    let (_dir, path) = temp_config(&text);
    let out = run_config(&path, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[FAIL]"));
}

#[test]
fn malformed_metric_is_config_error() {
    let text = edited("transform", "[\"1\", \"0\"], [\"0\", \"1\"]", "[\"1 +* x\", \"0\"], [\"0\", \"1\"]");
    let (_dir, path) = temp_config(&text);
    let out = run_config(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("config error") && err.contains("offset"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_symbol_is_config_error() {
    let text = edited("killing", "killing = [\"1\", \"0\", \"0\", \"0\"]", "killing = [\"1\", \"0\", \"psi\", \"0\"]");
    let (_dir, path) = temp_config(&text);
    let out = run_config(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("psi"));
}

#[test]
fn config_shape_errors_exit_two() {
    for (from, to) in [
        ("recipe = \"killing\"", "recipe = \"curvature\""),
        ("preset = \"schwarzschild\"", "preset = \"kerr\""),
        ("killing = [\"1\", \"0\", \"0\", \"0\"]", "vector = [\"1\", \"0\", \"0\", \"0\"]"),
        ("mass = 1.0", "mass = -1.0"),
    ] {
        let (_dir, path) = temp_config(&edited("killing", from, to));
        let out = run_config(&path, &[]);
        assert_eq!(out.status.code(), Some(2), "{to}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = grcalc(&["--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_config(&config("killing"), &["--order", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spacelike_mass_slice_fails_numerically() {
    let text = edited(
        "mass",
        "bounds = [[0.5, 0.5], [1.0, 2.0]",
        "bounds = [[0.0, 1.0], [1.5, 1.5]",
    );
    let (_dir, path) = temp_config(&text);
    let out = run_config(&path, &[]);
    assert_eq!(out.status.code(), Some(1));
    let lines = lines(&out);
    assert_eq!(lines.last().unwrap()["check"], "error");
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for recipe in ["gauss-check", "transform", "current"] {
        let mut files = Vec::new();
        for run in 0..2 {
            let out_dir = dir.path().join(format!("{recipe}-{run}"));
            let out = run_config(&config(recipe), &["--output", out_dir.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0));
            let summary = String::from_utf8(out.stdout).unwrap();
            assert!(summary.starts_with(&format!("grcalc {recipe}")), "{summary}");
            files.push(std::fs::read(out_dir.join(format!("{recipe}.jsonl"))).unwrap());
        }
        assert!(!files[0].is_empty());
        assert_eq!(files[0], files[1], "{recipe}");
    }
}

#[test]
fn gauss_report_fields_and_overrides() {
    let out = run_config(&config("gauss-check"), &["--order", "4", "--resolution", "24"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let line = &lines(&out)[0];
    for key in ["lhs", "rhs", "residual", "resolution", "order"] {
        assert!(line.get(key).is_some(), "missing {key}");
    }
    assert_eq!(line["eq"], "10");
    assert_eq!(line["order"], "fd4");
    assert_eq!(line["resolution"], serde_json::json!([24, 24, 24]));
    assert_eq!(line["tolerance"], 1e-4);

    let out = run_config(&config("gauss-check"), &["--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mass_report_carries_value_and_overrides() {
    let out = run_config(&config("mass"), &[]);
    let line = lines(&out).into_iter().find(|l| l["eq"] == "38").unwrap();
    let m = line["mass"].as_f64().unwrap();
    assert!((m + 4.940415114150e-3).abs() < 1e-12, "{m}");

    let (_dir, path) = temp_config(&edited("mass", "trace_coefficient = 1.0", "trace_coefficient = 1.0\norientation = -1.0"));
    let flipped = lines(&run_config(&path, &[])).into_iter().find(|l| l["eq"] == "38").unwrap();
    assert_eq!(flipped["mass"].as_f64().unwrap(), -m);
}
