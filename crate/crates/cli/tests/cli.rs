use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_icqnls"))
}

fn small_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/scattering_small.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn icqnls")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn scattering_run_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = run(&["run", small_config().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["passed"], true);
    assert_eq!(verdict["scenario"], "scattering");
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass,energy,dilation_A,variance,potential_V,grad_norm,h_theta_11,tail_fraction,boundary_mass_fraction\n"));
    assert!(csv.lines().count() > 10);
    for f in ["series.csv", "meta.json", "phi_plus.icqn", "checkpoints/u_000000.icqn"] {
        assert!(out.join(f).exists(), "missing {f}");
    }

    let o = run(&["inspect", out.join("checkpoints/u_000025.icqn").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("n          128"), "{text}");
    assert!(text.contains("t          2.5"), "{text}");
    assert!(text.contains("payload    262144 bytes"), "{text}");

    // a second run into the same directory is refused without --force
    let o = run(&["run", small_config().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn negative_growth_exponent_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = fs::read_to_string(small_config()).unwrap().replace("b1 = 0.25", "b1 = -1.0");
    fs::write(&cfg, text).unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fields.b1"), "{}", stderr(&o));
    assert!(!tmp.path().join("o/verdict.json").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    let text = fs::read_to_string(small_config()).unwrap().replace("[grid]", "[grid]\nspacing = 0.1");
    fs::write(&cfg, text).unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("spacing"), "{}", stderr(&o));
}

#[test]
fn unknown_suite_exits_2() {
    let o = run(&["verify", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("everything"));
}

#[test]
fn verify_identities_reports_json() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("report.json");
    let o = run(&["verify", "--suite", "identities", "--n", "128", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(rep["passed"], true);
    let names: Vec<&str> = rep["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    for n in ["parseval", "angular_commutation", "virial_identity", "dilation_identity"] {
        assert!(names.contains(&n), "missing {n}");
    }
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for d in &dirs {
        let o = run(&["run", small_config().to_str().unwrap(), "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["diagnostics.csv", "verdict.json", "series.csv", "phi_plus.icqn", "checkpoints/u_000100.icqn"] {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn sweep_runs_every_point() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let o = run(&[
        "sweep",
        small_config().to_str().unwrap(),
        "--set",
        "scenario.initial.width=2.5,3.0",
        "--set",
        "evolve.T=6.0",
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
    for w in ["2.5", "3.0"] {
        let dir = out.join(format!("scenario.initial.width={w}_evolve.T=6.0"));
        assert!(dir.join("verdict.json").exists(), "{}", dir.display());
        assert!(fs::read_to_string(dir.join("config.toml")).unwrap().contains("T = 6.0"));
    }
}

#[test]
fn inspect_rejects_garbage() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("x.icqn");
    fs::write(&p, b"NOPE and some more bytes to pass the length").unwrap();
    let o = run(&["inspect", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not an ICQN checkpoint"), "{}", stderr(&o));
}

#[test]
fn blowup_run_passes_despite_early_stop() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("blowup.toml");
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/blowup.toml");
    fs::write(&cfg, fs::read_to_string(base).unwrap().replace("checkpoint_stride = 100", "checkpoint_stride = 0")).unwrap();
    let out = tmp.path().join("o");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["passed"], true);
    assert_eq!(verdict["termination"]["kind"], "blowup_detected");
}

#[test]
fn early_termination_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("coarse.toml");
    let base = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/blowup.toml");
    let text = fs::read_to_string(base)
        .unwrap()
        .replace("n = 512", "n = 256")
        .replace("dt = 5e-5", "dt = 1e-4")
        .replace("checkpoint_stride = 100", "checkpoint_stride = 0");
    fs::write(&cfg, text).unwrap();
    let o = run(&["run", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
