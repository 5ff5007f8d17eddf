use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qrng_mesh::harness::run_from_args;
use qrng_mesh::mesh::read_plan;
use serde_json::Value;
use tempfile::TempDir;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> i32 {
    run_from_args(std::iter::once("qrng-mesh").chain(args.iter().copied()))
}

fn run_config(command: &str, config: &Path, out: &Path) -> i32 {
    run(&[
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn report(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const IDEAL_CERTIFY: &str = r#"
seed = 1
[circuit]
builtin = "ux"
[certify]
trials = 20000
coverage_trials = 5000
"#;

#[test]
fn decompose_writes_plans() {
    let dir = TempDir::new().unwrap();
    let identity = write(
        dir.path(),
        "id.json",
        r#"{"rows": [[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    assert_eq!(
        run(&[
            "decompose",
            "--unitary",
            identity.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap()
        ]),
        0
    );
    assert!(read_plan(dir.path().join("plan.json")).unwrap().is_empty());

    let ux = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/ux_unitary.json");
    assert_eq!(
        run(&[
            "decompose",
            "--unitary",
            ux,
            "--out",
            dir.path().to_str().unwrap()
        ]),
        0
    );
    assert_eq!(
        read_plan(dir.path().join("plan.json"))
            .unwrap()
            .beam_splitter_count(),
        3
    );
}

#[test]
fn decompose_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    let malformed = write(dir.path(), "bad.json", "[[1, 2], [3");
    assert_eq!(
        run(&[
            "decompose",
            "--unitary",
            malformed.to_str().unwrap(),
            "--out",
            out
        ]),
        2
    );
    let not_unitary = write(
        dir.path(),
        "nu.json",
        r#"{"rows": [[[1,0],[1,0]],[[0,0],[1,0]]]}"#,
    );
    assert_eq!(
        run(&[
            "decompose",
            "--unitary",
            not_unitary.to_str().unwrap(),
            "--out",
            out
        ]),
        2
    );
    assert_eq!(run(&["decompose", "--out", out]), 2);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["shuffle"]), 2);
    assert_eq!(run(&["certify"]), 2);
    assert_eq!(run(&["certify", "--config", "/nonexistent/run.toml"]), 2);
    assert_eq!(run(&["--help"]), 0);
}

#[test]
fn certify_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ideal = write(dir.path(), "ideal.toml", IDEAL_CERTIFY);
    assert_eq!(run_config("certify", &ideal, dir.path()), 0);
    let r = report(dir.path().join("certify_report.json"));
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["command"], "certify");

    let jitter = write(
        dir.path(),
        "jitter.toml",
        &format!("{IDEAL_CERTIFY}\n[errors]\njitter = {{ sigma_theta = 0.2, sigma_phi = 0.2 }}\n"),
    );
    assert_eq!(run_config("certify", &jitter, dir.path()), 1);

    let unseeded = write(
        dir.path(),
        "unseeded.toml",
        &IDEAL_CERTIFY.replace("seed = 1", ""),
    );
    assert_eq!(run_config("certify", &unseeded, dir.path()), 2);
    let unseeded = unseeded.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        run(&["certify", "--config", unseeded, "--seed", "4", "--out", out]),
        0
    );

    let unknown = write(
        dir.path(),
        "unknown.toml",
        &format!("{IDEAL_CERTIFY}\ncolour = \"red\"\n"),
    );
    assert_eq!(run_config("certify", &unknown, dir.path()), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "run.toml", IDEAL_CERTIFY);
    let out = dir.path().join("out");
    assert_eq!(run_config("certify", &config, &out), 0);
    let first = fs::read(out.join("certify_report.json")).unwrap();
    assert_eq!(run_config("certify", &config, &out), 0);
    assert_eq!(first, fs::read(out.join("certify_report.json")).unwrap());
}

#[test]
fn generate_statuses() {
    let dir = TempDir::new().unwrap();
    let base = "seed = 2\n[circuit]\nbuiltin = \"ux\"\n";
    let ideal = write(
        dir.path(),
        "ideal.toml",
        &format!("{base}[generate]\ntrials = 1000000\n"),
    );
    let out = dir.path().join("ideal");
    assert_eq!(run_config("generate", &ideal, &out), 0);
    let r = report(out.join("generate_report.json"));
    assert_eq!(r["result"]["chi_square"]["status"], "pass");
    assert_eq!(r["result"]["borel"]["status"], "pass");
    let first = fs::read(out.join("digits.bin")).unwrap();
    assert_eq!(run_config("generate", &ideal, &out), 0);
    assert_eq!(first, fs::read(out.join("digits.bin")).unwrap());

    let empty = write(
        dir.path(),
        "empty.toml",
        &format!("{base}[generate]\ntrials = 0\n"),
    );
    let out = dir.path().join("empty");
    assert_eq!(run_config("generate", &empty, &out), 0);
    let r = report(out.join("generate_report.json"));
    assert_eq!(r["result"]["digits"], 0);
    assert_eq!(r["result"]["chi_square"]["status"], "insufficient_data");
    assert_eq!(r["result"]["borel"]["status"], "insufficient_data");
    assert_eq!(
        fs::read_to_string(out.join("digits.txt")).unwrap().trim(),
        ""
    );

    let biased = write(
        dir.path(),
        "biased.toml",
        &format!("{base}[errors.systematic.0]\ntheta = 0.1\n[generate]\ntrials = 1000000\n"),
    );
    let out = dir.path().join("biased");
    assert_eq!(run_config("generate", &biased, &out), 1);
    let r = report(out.join("generate_report.json"));
    assert_eq!(r["result"]["chi_square"]["status"], "fail");
}

#[test]
fn calibrate_and_amplify() {
    let dir = TempDir::new().unwrap();
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    assert_eq!(
        run_config(
            "calibrate",
            &manifest.join("configs/calibrate.toml"),
            dir.path()
        ),
        0
    );
    let r = report(dir.path().join("calibration_report.json"));
    let estimate = r["result"]["estimates"][0].as_f64().unwrap();
    assert!((estimate - 0.02).abs() <= 0.005, "{estimate}");
    assert!(dir.path().join("corrected_plan.json").exists());
    assert!(dir.path().join("counts_0.csv").exists());

    assert_eq!(
        run_config(
            "amplify",
            &manifest.join("configs/amplify.toml"),
            dir.path()
        ),
        0
    );
    let rows = fs::read_to_string(dir.path().join("amplify.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn binary_reports_exit_codes() {
    let dir = TempDir::new().unwrap();
    let config = write(dir.path(), "run.toml", IDEAL_CERTIFY);
    let status = Command::new(env!("CARGO_BIN_EXE_qrng-mesh"))
        .args([
            "certify",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&status.stdout).contains("PASS"));
    let status = Command::new(env!("CARGO_BIN_EXE_qrng-mesh"))
        .arg("bogus")
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(2));
}
