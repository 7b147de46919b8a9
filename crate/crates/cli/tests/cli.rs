use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wasserflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wasserflow")).args(args).output().unwrap()
}

fn run_preset(name: &str, out: &Path) -> Output {
    wasserflow(&["run", "--preset", name, "--out", out.to_str().unwrap(), "--quiet"])
}

fn run_config(text: &str, dir: &Path) -> Output {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    let out = dir.join("out");
    wasserflow(&["run", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"])
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn preset_names() -> Vec<String> {
    let out = wasserflow(&["presets"]);
    assert!(out.status.success());
    String::from_utf8(out.stdout).unwrap().lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect()
}

#[test]
fn every_preset_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let names = preset_names();
    assert!(names.len() >= 7);
    for name in names {
        let out = run_preset(&name, &dir.path().join(&name));
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let manifest = json(&dir.path().join(&name).join("manifest.json"));
        assert_eq!(manifest["passed"], Value::Bool(true));
    }
}

#[test]
fn splitting_from_a_dirac_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("splitting_dirac", dir.path()).status.code(), Some(0));
    let summary = json(&dir.path().join("summary.json"));
    assert!(summary["max_reference_error"].as_f64().unwrap() <= 1e-12);
    let index = json(&dir.path().join("trajectory/index.json"));
    assert_eq!(index["N"], 20);
    // the last iterate is (delta_-1 + delta_1) / 2
    let last = std::fs::read_to_string(dir.path().join("trajectory/step_00020.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        last.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    let mut atoms: Vec<(f64, f64)> = rows.iter().map(|r| (r[1], r[0])).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert_eq!(atoms.len(), 2);
    for ((x, w), ex) in atoms.iter().zip([-1.0, 1.0]) {
        assert!((x - ex).abs() < 1e-12 && (w - 0.5).abs() < 1e-12);
    }
}

#[test]
fn walk_rate_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("constant_walk", dir.path()).status.code(), Some(0));
    let slope = json(&dir.path().join("summary.json"))["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() <= 0.02, "{slope}");
    let rate = std::fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    assert_eq!(rate.lines().count(), 7);
}

#[test]
fn rhombus_pairings_disagree() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_preset("rhombus_pairing", dir.path()).status.code(), Some(0));
    let s = json(&dir.path().join("summary.json"));
    assert!((s["right"].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert!((s["left"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["constant_walk", "certify_rotation"] {
        let (a, b) = (dir.path().join(format!("{name}-a")), dir.path().join(format!("{name}-b")));
        assert!(run_preset(name, &a).status.success());
        assert!(run_preset(name, &b).status.success());
        let ma = std::fs::read(a.join("manifest.json")).unwrap();
        assert_eq!(ma, std::fs::read(b.join("manifest.json")).unwrap());
        for entry in json(&a.join("manifest.json"))["files"].as_array().unwrap() {
            let rel = entry["path"].as_str().unwrap();
            assert_eq!(std::fs::read(a.join(rel)).unwrap(), std::fs::read(b.join(rel)).unwrap(), "{rel}");
        }
    }
}

#[test]
fn manifest_lists_hashes_and_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_preset("rotation_disc", dir.path()).status.success());
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "rate-study");
    assert!(m["stability"]["auto"]["l"].as_f64().unwrap() > 0.0);
    assert!(m["tolerances"]["merge_tol"].as_f64().is_some());
    for entry in m["files"].as_array().unwrap() {
        let bytes = std::fs::read(dir.path().join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(entry["sha256"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn seed_flag_changes_sampled_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = wasserflow(&[
            "run",
            "--preset",
            "certify_rotation",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("certificate.json")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert_eq!(json(&dir.path().join("a/manifest.json"))["seed"], 1);
}

#[test]
fn malformed_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "command = \"simulate\"\n[field]\nkind = \"rotation\"\n",
        "command = \"simulate\"\nbogus = 1\n",
        "command = \"nonsense\"\n",
        "command = \"simulate\"\n[field]\nkind = \"splitting_particle\"\n[initial]\nkind = \"atoms\"\nrows = [[0.7, 0.0]]\n[numeric]\ntau = 0.1\nhorizon = 1.0\nbound = 1.0\n",
    ];
    for text in cases {
        let out = run_config(text, dir.path());
        assert_eq!(out.status.code(), Some(1), "{text}");
        assert!(!dir.path().join("out/manifest.json").exists());
    }
    assert_eq!(wasserflow(&["run", "--preset", "no_such_preset", "--quiet"]).status.code(), Some(1));
}

#[test]
fn leaving_the_stability_bound_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = "command = \"simulate\"\n[field]\nkind = \"rotation\"\n[initial]\nkind = \"dirac\"\nat = [1.0, 0.0]\n\
                [numeric]\ntau = 0.2\nhorizon = 2.0\nbound = 1.05\n";
    let out = run_config(text, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step 3"));
}

#[test]
fn failing_check_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // a stationary curve is not the splitting flow
    let text = "command = \"evi-check\"\n[field]\nkind = \"splitting_particle\"\n[initial]\nkind = \"dirac\"\nat = [0.0]\n\
                [numeric]\nhorizon = 1.0\nlambda = 0.5\n[reference]\nkind = \"stationary\"\n\
                [evi]\ncurve = \"reference\"\nsamples = 11\ntargets = [{ kind = \"uniform\", a = 0.0, b = 1.0, n = 50 }]\n";
    let out = run_config(text, dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&dir.path().join("out/manifest.json"));
    assert_eq!(m["passed"], Value::Bool(false));
}

#[test]
fn presets_can_be_printed() {
    let out = wasserflow(&["presets", "rhombus_pairing"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("command = \"pairing\""));
}
