use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use sqbtc::cli::run_from;

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["sqbtc"];
    all.extend_from_slice(args);
    run_from(all)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn check_manifest(dir: &Path) -> Value {
    let manifest = read_json(&dir.join("manifest.json"));
    for rec in manifest["artifacts"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(rec["file"].as_str().unwrap())).unwrap();
        assert_eq!(rec["bytes"].as_u64().unwrap() as usize, bytes.len());
        assert_eq!(rec["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)));
    }
    manifest
}

#[test]
fn steady_task_writes_observables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("steady");
    let code = run(&["steady", "--out", out.to_str().unwrap(), "--set", "model.n_atoms=4", "--set", "model.drive_ratio=0"]);
    assert_eq!(code, 0);
    let manifest = check_manifest(&out);
    assert_eq!(manifest["status"], "ok");
    let obs = read_json(&out.join("steady_obs.json"));
    assert!((obs["Sz_over_N"].as_f64().unwrap() + 0.5).abs() < 1e-10, "{obs}");
    assert!(out.join("pm.csv").exists());
}

#[test]
fn spectrum_task_from_a_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.json");
    std::fs::write(&cfg, r#"{ "task": "spectrum", "model": { "n_atoms": 1, "drive_ratio": 0.0 } }"#).unwrap();
    let out = tmp.path().join("spec");
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let text = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("re,im"));
    let re: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    let want = [0.0, -2.0, -2.0, -4.0];
    assert_eq!(re.len(), 4);
    for (g, w) in re.iter().zip(want) {
        assert!((g - w).abs() < 1e-10, "{re:?}");
    }
    let gaps = read_json(&out.join("gaps.json"));
    assert!(gaps.to_string().contains("delta_2"));
    check_manifest(&out);

    // the config names a different task
    assert_eq!(run(&["steady", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["steady", "--out", out, "--set", "model.n_atom=4"]), 2);
    assert_eq!(run(&["steady", "--out", out, "--set", "model.n_atoms=0"]), 2);
    assert_eq!(run(&["steady", "--out", out, "--set", "model.drive_ratio=1", "--set", "model.rabi=1"]), 2);
    assert_eq!(run(&["steady", "--out", out, "--config", "/nonexistent/run.json"]), 2);
    assert_eq!(run(&["no-such-task"]), 2);
}

#[test]
fn resource_caps_exit_with_four_and_leave_a_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cap");
    let code = run(&["steady", "--out", out.to_str().unwrap(), "--set", "model.n_atoms=20", "--set", "max_atoms=10"]);
    assert_eq!(code, 4);
    let diag = read_json(&out.join("diagnostic.json"));
    assert!(diag.to_string().contains("cap"), "{diag}");
    let manifest = check_manifest(&out);
    assert_ne!(manifest["status"], "ok");

    let out = tmp.path().join("dense");
    let code = run(&[
        "spectrum",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "model.n_atoms=70",
        "--set",
        "spectrum.method=\"dense\"",
    ]);
    assert_eq!(code, 4);
}

#[test]
fn drive_sweep_table_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "2")] {
        let out = tmp.path().join(name);
        let code = run(&[
            "sweep-drive",
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
            "--set",
            "model.n_atoms=6",
            "--set",
            "sweep.points=[0.5,1.0,1.5]",
            "--set",
            "sweep.outputs=[\"steady\",\"variances\"]",
        ]);
        assert_eq!(code, 0);
        check_manifest(&out);
        tables.push(std::fs::read(out.join("sweep.csv")).unwrap());
        assert!(out.join("sweep.meta.json").exists());
    }
    assert_eq!(tables[0], tables[1]);
    let text = String::from_utf8(tables.remove(0)).unwrap();
    assert!(text.starts_with("value,n_atoms,drive_ratio,n_bar"));
    assert_eq!(text.lines().count(), 4);
}
