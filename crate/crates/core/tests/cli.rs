use std::fs;
use std::path::Path;
use std::process::Command;

use vortexnoise::io::read_snapshot;

const SMALL: &str = r#"
[model]
galerkin_radius = 4

[noise]
shells = [1, 2]

[time]
dt = 2e-3
t_end = 0.02
snapshot_every = 5

[run]
paths = 4

[experiment]
energy_paths = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortexnoise"))
}

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, String, String) {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn corrector_check_writes_table_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let (code, stdout, _) = run(tmp.path(), SMALL, &["--out", out.to_str().unwrap(), "corrector-check"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("rel_error"));
    let csv = fs::read_to_string(out.join("corrector_study.csv")).unwrap();
    assert!(csv.starts_with("N,support,rel_error,rayleigh_S"));
    assert_eq!(csv.lines().count(), 3);
    let m = manifest(&out);
    assert_eq!(m["command"], "corrector-check");
    assert_eq!(m["constants"]["rayleigh_tolerance"], 0.15);
    assert!(m["theta_support"]["2"].as_array().unwrap().len() > 100);
}

#[test]
fn simulate_writes_tables_snapshots_and_status() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    let (code, _, _) = run(tmp.path(), SMALL, &["--quiet", "--out", out.to_str().unwrap(), "simulate"]);
    assert_eq!(code, 0);
    let diag = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,l2,h1,hminus_delta,cutoff,flux_b,dissip,flux_S\n"));
    assert_eq!(diag.lines().count(), 11);
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,delta_energy,martingale,quadratic,linear,nonlinear,corrector,residual\n"));
    assert!(out.join("snapshots/snap_00001.vnsf").exists());
    let fin = read_snapshot(&out.join("final.vnsf")).unwrap();
    assert_eq!(fin.lattice().radius(), 4);
    let m = manifest(&out);
    assert_eq!(m["constants"]["status"]["status"], "completed");
    assert_eq!(m["steps"], 10);
    assert_eq!(m["seed_schedule"]["base_seed"], 0);
}

#[test]
fn blow_up_is_data_not_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("b");
    let cfg = r#"
[model]
galerkin_radius = 4
norm = 3000.0
[noise]
nu = 0.0
[cutoff]
enabled = false
[time]
dt = 5e-3
t_end = 0.1
"#;
    let (code, stdout, _) = run(tmp.path(), cfg, &["--out", out.to_str().unwrap(), "simulate"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("blown up at t ="), "{stdout}");
    assert_eq!(manifest(&out)["constants"]["status"]["status"], "blown-up");
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run(tmp.path(), SMALL, &["--paths", "0", "scaling-limit"]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = run(tmp.path(), SMALL, &["no-such-command"]);
    assert_eq!(code, 2);
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let (code, _, stderr) = run(tmp.path(), "[cutoff]\ndelta = 0.7\n", &["simulate"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("δ ∈ (0,1/2)") && stderr.contains("line 2"), "{stderr}");
    let (code, _, stderr) = run(tmp.path(), "[time]\ndt = -1.0\n", &["simulate"]);
    assert_eq!(code, 2, "{stderr}");
}

#[test]
fn failed_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d");
    // Strong data, almost no viscosity and no calibration: the bound must break.
    let cfg = r#"
[model]
galerkin_radius = 4
norm = 80.0
reynolds = 50.0
magnetic_reynolds = 50.0
[noise]
nu = 0.0
[cutoff]
enabled = false
[time]
dt = 2e-3
t_end = 0.2
[experiment]
calibrate = false
"#;
    let (code, stdout, _) = run(tmp.path(), cfg, &["--out", out.to_str().unwrap(), "decay-check"]);
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("first violated"));
    assert_eq!(manifest(&out)["constants"]["passed"], false);
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["simulate", "scaling-limit", "energy-check"] {
        let a = tmp.path().join(format!("{cmd}-a"));
        let b = tmp.path().join(format!("{cmd}-b"));
        for d in [&a, &b] {
            let (code, _, err) = run(tmp.path(), SMALL, &["--quiet", "--seed", "7", "--out", d.to_str().unwrap(), cmd]);
            assert!(code == 0 || code == 1, "{cmd}: {err}");
        }
        let (x, y) = (csv_bytes(&a), csv_bytes(&b));
        assert!(!x.is_empty());
        assert_eq!(x, y, "{cmd} output differs between runs");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, SMALL).unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let d = tmp.path().join(format!("t{threads}"));
        let st = bin()
            .env("VORTEXNOISE_THREADS", threads)
            .args(["--quiet", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "scaling-limit"])
            .status()
            .unwrap();
        assert!(st.code() == Some(0) || st.code() == Some(1));
        outs.push(csv_bytes(&d));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn seed_changes_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for seed in ["1", "2"] {
        let d = tmp.path().join(seed);
        let (code, _, _) = run(tmp.path(), SMALL, &["--quiet", "--seed", seed, "--out", d.to_str().unwrap(), "simulate"]);
        assert_eq!(code, 0);
        outs.push(fs::read(d.join("diagnostics.csv")).unwrap());
    }
    assert_ne!(outs[0], outs[1]);
}
