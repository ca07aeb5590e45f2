use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn pmm(args: &[&str], dir: &Path, seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pmm"));
    cmd.args(args).current_dir(dir).env_remove("PMM_SEED");
    if let Some(s) = seed_env {
        cmd.env("PMM_SEED", s);
    }
    cmd.output().expect("pmm runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_SOLVE: &[&str] = &["--cells=40", "--snapshots=20", "--T=0.05"];

#[test]
fn oracle_at_n5_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pmm(&["oracle", "--n=5", "--alpha=0.3", "--beta=0.3", "--out=o"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(tmp.path().join("o/oracle.csv")).unwrap();
    for q in ["max_row_sum", "stationarity", "detailed_balance", "laplacian_identity"] {
        assert!(report.contains(q), "{q} missing");
    }
    assert!(tmp.path().join("o/generator.txt").exists());
    assert!(tmp.path().join("o/density.csv").exists());
    assert_eq!(manifest(&tmp.path().join("o"))["status"], "ok");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pmm(&["solve", "--cfl=2.0", "--out=a"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unstable"), "{}", stderr(&o));

    let o = pmm(&["solve", "--alpha=1.2"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("alpha") && stderr(&o).contains("(0, 1)"));

    let o = pmm(&["solve", "--kapa=1"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown key"));

    let o = pmm(&["fly"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));

    // no reservoir checks above n = 14
    let o = pmm(&["oracle", "--n=40", "--out=b"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(1));

    let o = pmm(&["--help"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("kappa_grid"));
}

#[test]
fn file_flag_and_env_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "# sweep settings\ncommand=solve\nkappa=1\nm=2\nn=100\nseed=4\n").unwrap();
    let mut args = vec!["--config", "run.cfg", "--kappa=5", "--out=p"];
    args.extend_from_slice(SMALL_SOLVE);
    let o = pmm(&args, tmp.path(), Some("9"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&tmp.path().join("p"));
    assert_eq!(m["config"]["kappa"], "5");
    assert_eq!(m["config"]["seed"], "9");
    assert_eq!(m["config"]["a"], "1.5");
    assert_eq!(m["config"]["cfl"], "0.4");
    assert_eq!(m["config"]["theta"], "1");
    let defaulted: Vec<&str> = m["defaulted"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for k in ["a", "cfl", "theta"] {
        assert!(defaulted.contains(&k));
    }
    assert!(!defaulted.contains(&"seed"));

    let mut args = vec!["--config", "run.cfg", "--seed=11", "--out=q"];
    args.extend_from_slice(SMALL_SOLVE);
    let o = pmm(&args, tmp.path(), Some("9"));
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(manifest(&tmp.path().join("q"))["config"]["seed"], "11");
}

#[test]
fn sweep_rerun_is_byte_identical_and_manifest_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--out=s1", "--kappa_grid=1,0.1,0.01"];
    args.extend_from_slice(SMALL_SOLVE);
    assert_eq!(pmm(&args, tmp.path(), None).status.code(), Some(0));
    args[1] = "--out=s2";
    assert_eq!(pmm(&args, tmp.path(), None).status.code(), Some(0));
    let a = fs::read(tmp.path().join("s1/sweep.csv")).unwrap();
    let b = fs::read(tmp.path().join("s2/sweep.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 4);

    // the echoed config reruns the experiment
    let o = pmm(&["--config", "s1/config.txt", "--out=s3"], tmp.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(a, fs::read(tmp.path().join("s3/sweep.csv")).unwrap());

    // checksums in the manifest match the files
    let m = manifest(&tmp.path().join("s1"));
    for entry in m["files"].as_array().unwrap() {
        let name = entry["name"].as_str().unwrap();
        let bytes = fs::read(tmp.path().join("s1").join(name)).unwrap();
        let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(entry["sha256"].as_str().unwrap(), hex, "{name}");
    }
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
}

#[test]
fn csv_floats_carry_seventeen_digits() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["solve", "--out=f", "--bc=dirichlet"];
    args.extend_from_slice(SMALL_SOLVE);
    assert_eq!(pmm(&args, tmp.path(), None).status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("f/field.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u,rho"));
    let row: Vec<&str> = lines.nth(3).unwrap().split(',').collect();
    let mantissa = row[2].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
    assert_eq!(text.lines().count(), 1 + 21 * 40);
}

#[test]
fn simulate_is_seeded() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str| {
        let o = pmm(&["simulate", "--n=30", "--T=0.02", "--samples=4", &format!("--out={out}")], tmp.path(), Some(seed));
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(tmp.path().join(out).join("trajectory.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 1 + 5 * 29);
}

#[test]
fn remaining_commands_run() {
    let tmp = tempfile::tempdir().unwrap();
    let particle = ["--n_grid=10,20", "--trajectories=30", "--T=0.02", "--samples=2", "--bins=5", "--pde_cells=40"];
    let cases: Vec<(Vec<&str>, &[&str])> = vec![
        (vec!["energy", "--out=e", "--j_max=2"], &["energy.csv"]),
        (vec!["hydro", "--out=h", "--theta=2"], &["hydro_profiles.csv", "hydro_levels.csv"]),
        (vec!["slowbond", "--out=sb", "--kappa_grid=1,10"], &["sweep.csv", "hydro_levels.csv"]),
    ];
    for (mut args, files) in cases {
        args.extend_from_slice(SMALL_SOLVE);
        if args[0] != "energy" {
            args.extend_from_slice(&particle);
        }
        let out = args[1].trim_start_matches("--out=").to_string();
        let o = pmm(&args, tmp.path(), None);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        for f in files {
            assert!(tmp.path().join(&out).join(f).exists(), "{out}/{f}");
        }
    }
    let m = manifest(&tmp.path().join("sb"));
    assert_eq!(m["result"]["hydro"]["grade"], "conjecture");
    let energy = fs::read_to_string(tmp.path().join("e/energy.csv")).unwrap();
    assert!(energy.lines().any(|l| l.starts_with("dual_value,")));
}
