use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn afem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afem")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"
problem = "lshape_singular"
theta = 0.5

[stop]
max_elements = 3000
"#;

#[test]
fn run_writes_csv_summary_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("out");
    let o = afem(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--vtk-every", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("levels.csv")).unwrap();
    assert!(csv.lines().count() >= 11, "expected at least 10 levels");
    assert!(out.join("timing.csv").exists());
    assert!(out.join("mesh_000.vtk").exists() && out.join("mesh_005.vtk").exists());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["problem"], "lshape_singular");
    assert!(summary["estimator_rate"]["slope"].as_f64().unwrap() > 0.3);
}

#[test]
fn same_config_gives_identical_level_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        assert!(afem(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"]).status.success());
        files.push(fs::read(out.join("levels.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn stop_flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("out");
    let o = afem(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--stop-eta", "1e-1"]);
    assert!(o.status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["stop_reason"], "eta");
    assert!(summary["final_eta"].as_f64().unwrap() < 1e-1);
}

#[test]
fn json_configs_are_accepted() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"problem": "square_sine", "estimator": "zz", "stop": {"max_levels": 3}}"#,
    );
    let out = tmp.path().join("out");
    let o = afem(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("levels.csv")).unwrap().lines().count(), 4);
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    assert_eq!(afem(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = write_config(tmp.path(), "bad.toml", "problem = \"lshape_singular\"\ntheta = 1.5\n");
    assert_eq!(afem(&["run", "--config", &bad]).status.code(), Some(2));
    let typo = write_config(tmp.path(), "typo.toml", "problme = \"x\"\n");
    assert_eq!(afem(&["run", "--config", &typo]).status.code(), Some(2));
    let unknown = write_config(tmp.path(), "u.toml", "problem = \"nope\"\n");
    assert_eq!(afem(&["run", "--config", &unknown]).status.code(), Some(2));
    assert_eq!(afem(&["frobnicate"]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("s");
    assert_eq!(afem(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--theta="]).status.code(), Some(2));
}

#[test]
fn rates_from_an_existing_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("out");
    assert!(afem(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let o = afem(&["rates", "--input", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("estimator") && text.contains("slope"));
}

#[test]
fn sweep_runs_every_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMALL);
    let out = tmp.path().join("sweep");
    let o = afem(&[
        "sweep", "--config", &cfg, "--out", out.to_str().unwrap(), "--theta", "0.3,0.7", "--vartheta", "0.1", "--jobs", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert!(out.join("theta_0.3_vartheta_0.1").join("levels.csv").exists());
}

#[test]
fn verify_writes_a_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "problem = \"square_sine\"\n[stop]\nmax_elements = 2000\n[verify]\nstability_samples = 20\n",
    );
    let out = tmp.path().join("v");
    let o = afem(&["verify", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.contains("pythagoras") && stdout.contains("mesh_axioms"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verification.json")).unwrap()).unwrap();
    assert!(report["entries"].as_array().unwrap().len() >= 8);
}
