//! The `riccilab` binary: exit codes, report files and reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn riccilab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riccilab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn riccilab")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn compare_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[compare]\nr_count = 10\nk_count = 11\n");
    let out = riccilab(dir.path(), &["--config", "c.toml", "--out-dir", "o", "compare"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("o/compare.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "riccilab.compare/1");
    assert!(report["min_gap"].as_f64().unwrap() >= -1e-12);
    let csv = fs::read_to_string(dir.path().join("o/compare.csv")).unwrap();
    assert!(csv.starts_with("t,r,k,n,gap\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 10 * 11 * 19);
}

#[test]
fn hyperbolic_disc_pair_passes_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "curvature = 1.0\n[resolution]\nradial = 64\nangular = 16\n";
    write(dir.path(), "h.toml", cfg);
    for o in ["a", "b"] {
        let out = riccilab(
            dir.path(),
            &["--config", "h.toml", "--out-dir", o, "check-entropy-convexity"],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["check-entropy-convexity.json", "check-entropy-convexity.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a/check-entropy-convexity.json")).unwrap()).unwrap();
    for key in [
        "model",
        "measures",
        "t_grid",
        "ent",
        "rhs",
        "slack",
        "K_integral",
        "pass",
        "tolerances",
        "grid_resolution",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn too_strong_bound_exits_with_check_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
curvature = -0.5
[model]
kind = "euclidean-plane"
[source]
preset = "uniform-ball"
radius = 1.0
[target]
preset = "uniform-ball"
radius = 1.0
center = [2.0, 0.0]
[resolution]
radial = 32
angular = 16
"#;
    write(dir.path(), "f.toml", cfg);
    let out = riccilab(
        dir.path(),
        &[
            "--config",
            "f.toml",
            "--out-dir",
            "o",
            "--format",
            "json",
            "check-entropy-convexity",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("o/check-entropy-convexity.json").exists());
    assert!(!dir.path().join("o/check-entropy-convexity.csv").exists());
}

#[test]
fn malformed_inputs_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "w.toml",
        "[model]\nkind = \"surface-of-revolution\"\nwarp = \"sinh(r\"\nr_max = 3.0\n",
    );
    let out = riccilab(dir.path(), &["--config", "w.toml", "volume-growth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error in model.warp"));

    write(dir.path(), "t.toml", "seed = 1\n[growth]\neps = \"big\"\n");
    let out = riccilab(dir.path(), &["--config", "t.toml", "volume-growth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t.toml:3"));

    let out = riccilab(dir.path(), &["--tolerance-scale", "-1", "compare"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn growth_outside_the_chart_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.toml", "[growth]\neps = 1.0\nr_grid = [2.0, 11.0]\n");
    let out = riccilab(dir.path(), &["--config", "g.toml", "volume-growth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("largest admissible R"));
}

#[test]
fn catalog_lists_models_and_measures() {
    let dir = tempfile::tempdir().unwrap();
    let out = riccilab(dir.path(), &["list-presets", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let cat: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let names = |k: &str| -> Vec<String> {
        cat[k]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["name"].as_str().unwrap().to_string())
            .collect()
    };
    for m in [
        "euclidean-plane",
        "hyperbolic-plane",
        "sphere-cap",
        "surface-of-revolution",
    ] {
        assert!(names("models").contains(&m.to_string()), "{m}");
    }
    for m in ["uniform-ball", "annulus", "radial-profile"] {
        assert!(names("measures").contains(&m.to_string()), "{m}");
    }
    let text = riccilab(dir.path(), &["list-presets"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("hyperbolic-plane"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = riccilab::cli::ExperimentConfig::load(&path).unwrap();
            cfg.model.build(cfg.base_dir.as_deref(), cfg.tolerance_scale).unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
