use std::path::Path;
use std::process::{Command, Output};

fn fraclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fraclab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(out: &Output) -> Vec<Vec<f64>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn arctan_layer_image() {
    let out = fraclab(&["eval", "--op", "fraclap", "--oracle", "arctan", "--s", "0.5", "--points", "0,1"]);
    assert!(out.status.success());
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    assert!(r[0][1].abs() < 1e-10);
    assert!((r[1][1] - std::f64::consts::FRAC_1_PI).abs() < 1e-8);
}

#[test]
fn constant_has_zero_image() {
    let out = fraclab(&["eval", "--op", "fraclap", "--oracle", "const", "--points", "-3,0,2.5"]);
    assert!(out.status.success());
    assert!(rows(&out).iter().all(|r| r[1] == 0.0));
}

#[test]
fn caputo_of_square() {
    let out = fraclab(&["eval", "--op", "caputo", "--fn", "t^2", "--s", "0.5", "--t", "1"]);
    assert!(out.status.success());
    let r = rows(&out);
    assert!((r[0][1] - 8.0 / 3.0).abs() < 1e-9, "{r:?}");
    // the error column compares with the L1 scheme
    assert!(r[0][2] > 0.0 && r[0][2] < 1e-3);
}

#[test]
fn floats_have_seventeen_digits() {
    let out = fraclab(&["heat", "--s", "0.5", "--x", "0,1", "--t", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("x,value\n"));
    let cell = text.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    assert_eq!(cell, format!("{:.16e}", 0.5 / std::f64::consts::PI));
}

#[test]
fn verify_oracles_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = fraclab(&["verify", "--suite", "oracles", "--s", "0.5", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(&path)).unwrap();
    assert_eq!(v["suite"], "oracles");
    assert!(v["seed"].is_u64());
    assert!(v["versions"].is_object());
    let checks = v["checks"].as_array().unwrap();
    for name in ["u_half_constancy", "u_minus_half_harmonicity", "arctan_layer_image"] {
        assert!(checks.iter().any(|c| c["name"] == name), "missing {name}");
    }
    for c in checks {
        for key in ["name", "paper_ref", "residual", "threshold", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
        assert_eq!(c["pass"], true);
    }
}

#[test]
fn quick_suite_keeps_schema() {
    let out = fraclab(&["verify", "--suite", "all", "--quick"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["suite"], "all");
    assert!(v["checks"].as_array().unwrap().len() > 20);
    assert_eq!(v["config"]["quick"], "true");
}

#[test]
fn walk_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let prefix = dir.path().join(name);
        let out = fraclab(&[
            "walk", "--kind", "classical", "--N", "100000", "--t", "0.5", "--seed", "7", "--out",
            prefix.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        (
            read(&dir.path().join(format!("{name}_density.csv"))),
            read(&dir.path().join(format!("{name}_msd.csv"))),
        )
    };
    let (d1, m1) = run("a");
    let (d2, m2) = run("b");
    assert_eq!(d1, d2);
    assert_eq!(m1, m2);
    assert!(d1.starts_with("bin_center,mass\n"));
    assert!(m1.starts_with("t,msd"));
}

#[test]
fn free_walk_reports_tail() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("free");
    let out = fraclab(&["walk", "--kind", "free", "--s", "0.5", "--seed", "3", "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(&dir.path().join("free_density.csv"));
    let tail: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((tail + 2.0).abs() < 0.15, "{tail}");
}

#[test]
fn comb_backbone_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("comb");
    let out = fraclab(&["walk", "--kind", "comb", "--N", "20000", "--seed", "1", "--out", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(&dir.path().join("comb_msd.csv"));
    assert!(text.starts_with("t,msd,msd_y,backbone_fraction,fit_exponent\n"));
    let fit: f64 = text.lines().next_back().unwrap().split(',').next_back().unwrap().parse().unwrap();
    assert!((fit - 0.5).abs() < 0.1, "{fit}");
}

#[test]
fn bad_parameters_exit_two() {
    for args in [
        vec!["eval", "--s", "1.5", "--oracle", "const"],
        vec!["eval", "--op", "nope", "--oracle", "const"],
        vec!["eval", "--oracle", "const", "--points", "a,b"],
        vec!["walk", "--kind", "classical", "--h", "-1"],
        vec!["walk", "--kind", "sideways"],
        vec!["verify", "--suite", "everything"],
        vec!["caputo", "--fn", "bogus"],
        vec!["heat", "--grid", "1:0:5"],
        vec!["frobnicate"],
    ] {
        let out = fraclab(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unresolvable_tolerance_exits_three() {
    let out = fraclab(&["eval", "--oracle", "gaussian", "--s", "0.5", "--points", "0.3", "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults for this run\nop = caputo\nfn = t^2\ns = 0.25\nt = 1, 2\n").unwrap();
    let out = fraclab(&["eval", "--config", cfg.to_str().unwrap(), "--s", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 2);
    // s = 0.5 from the flag, not 0.25 from the file
    assert!((r[0][1] - 8.0 / 3.0).abs() < 1e-9);
    assert!((r[1][1] - 8.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-8);
}

#[test]
fn json_tables() {
    let out = fraclab(&["caputo", "--fn", "t", "--s", "0.5", "--steps", "8", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 9);
    // L1 is exact for linear data: t^{1-s}/(1-s)
    let last = &rows[8];
    assert!((last["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn spectral_torus_eval() {
    let out = fraclab(&["eval", "--op", "spectral", "--fn", "gaussian", "--s", "0.5", "--a", "-8", "--b", "8", "--n", "128"]);
    assert!(out.status.success());
    let r = rows(&out);
    assert_eq!(r.len(), 128);
    let centre = r.iter().find(|row| row[0] == 0.0).unwrap();
    // (1/2π)∫|ξ|√π e^{−ξ²/4}dξ on the line; the periodic copies at distance
    // 16m each pull the value down by about √π/(π(16m)²)
    let pi = std::f64::consts::PI;
    let want = 2.0 / pi.sqrt() - 2.0 * pi.sqrt() / pi / 256.0 * pi * pi / 6.0;
    assert!((centre[1] - want).abs() < 2e-4, "{centre:?} vs {want}");
}
