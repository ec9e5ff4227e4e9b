//! End-to-end tests of the compiled `hardthresh` binary: flag parsing, file
//! outputs, and byte-level reproducibility of the deterministic artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hardthresh::DenseMatrix;
use hardthresh_bench::files::{read_vector_csv, write_text};
use hardthresh_bench::generate_cs_instance;
use hardthresh_testkit::random_psd;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hardthresh"))
}

/// Fresh scratch directory, unique per test and process.
fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hardthresh-cli-{tag}-{}", std::process::id()));
    fs::remove_dir_all(&dir).ok();
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("the binary should launch");
    assert!(
        out.status.success(),
        "command failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn matrix_csv(a: &DenseMatrix) -> String {
    let mut text = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols()).map(|j| format!("{:e}", a.get(i, j))).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

fn vector_csv(v: &hardthresh::Vector) -> String {
    v.iter().map(|x| format!("{x:e}\n")).collect()
}

fn read_bytes(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn bench_cs_reruns_reproduce_identical_artifacts() {
    let dir = scratch("bench-cs");
    let base = [
        "bench", "cs", "--m", "24", "--n", "48", "--levels", "2,3", "--trials", "2", "--algs",
        "gpnp-l,iht-lsr", "--seed", "11", "--quiet",
    ];
    for run in ["run1", "run2"] {
        let out = run_ok(bin().args(base).arg("--out").arg(dir.join(run)));
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("recovery rate"), "missing rate table:\n{stdout}");
        assert!(stdout.contains("gpnp-l"), "missing algorithm row:\n{stdout}");
    }

    let records = read_bytes(&dir.join("run1/records.csv"));
    assert_eq!(records, read_bytes(&dir.join("run2/records.csv")), "records.csv not reproducible");
    assert_eq!(
        read_bytes(&dir.join("run1/summary.json")),
        read_bytes(&dir.join("run2/summary.json")),
        "summary.json not reproducible"
    );
    let header = String::from_utf8(records).unwrap();
    assert!(header.starts_with("# recovery-records v1\nalgorithm,"), "unexpected records header");
    // timings are measured, not replayed; only their shape is stable
    let timings = String::from_utf8(read_bytes(&dir.join("run1/timings.csv"))).unwrap();
    assert!(timings.starts_with("# phase-timings v1\nphase,"), "unexpected timings header");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_recovers_a_planted_instance_and_writes_outputs() {
    let dir = scratch("solve");
    let inst = generate_cs_instance(16, 24, 2, 3).unwrap();
    write_text(&dir.join("a.csv"), &matrix_csv(&inst.a)).unwrap();
    write_text(&dir.join("b.csv"), &vector_csv(&inst.b)).unwrap();

    let out = run_ok(
        bin()
            .arg("solve")
            .args(["--s", "2", "--alg", "gpnp-l"])
            .arg("--matrix")
            .arg(dir.join("a.csv"))
            .arg("--rhs")
            .arg(dir.join("b.csv"))
            .arg("--out")
            .arg(dir.join("x.csv"))
            .arg("--trace")
            .arg(dir.join("trace.csv")),
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["algorithm"], "gpnp-l");
    assert_eq!(report["s"], 2);
    assert!(report["residual"].as_f64().unwrap() < 1e-8, "large residual: {report}");
    let support: Vec<usize> =
        report["support"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(support, inst.x_star.support().as_slice(), "wrong support reported");

    let x = read_vector_csv(&dir.join("x.csv")).unwrap();
    let err = x.sub(inst.x_star.x()).norm() / inst.x_star.x().norm();
    assert!(err < 1e-6, "written solution off by {err:e}");
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,f,support_size,step_norm,event\n"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn dsm_subcommand_reports_certificates_and_writes_weights() {
    let dir = scratch("dsm");
    let c = random_psd(12, 5);
    write_text(&dir.join("gram.csv"), &matrix_csv(&c)).unwrap();

    let out = run_ok(
        bin()
            .args(["dsm", "--model", "linear", "--seed", "5"])
            .arg("--input")
            .arg(dir.join("gram.csv"))
            .arg("--out")
            .arg(dir.join("w.csv")),
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["w"].as_array().unwrap().len(), 12);
    assert!(report["gap"].as_f64().unwrap() < 0.01, "large gap: {report}");
    assert!(report["feasibility_margin"].as_f64().unwrap() > -1e-8, "infeasible: {report}");

    let w = read_vector_csv(&dir.join("w.csv")).unwrap();
    assert_eq!(w.len(), 12);
    assert!(w.iter().all(|&v| v > 0.0), "weights must be positive");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_dsm_writes_records_and_trajectories() {
    let dir = scratch("bench-dsm");
    run_ok(
        bin()
            .args(["bench", "dsm", "--sizes", "32", "--models", "linear", "--modes", "sequential"])
            .args(["--seed", "3"])
            .arg("--out")
            .arg(&dir),
    );
    let records = fs::read_to_string(dir.join("dsm_records.csv")).unwrap();
    assert!(records.starts_with("# dsm-bench v1\n"));
    assert_eq!(records.lines().count(), 3, "expected header lines plus one record");
    let trajectory = fs::read_to_string(dir.join("trajectory_n32_linear_sequential.csv")).unwrap();
    assert!(trajectory.starts_with("sweep,dual,rel_err\n"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let dir = scratch("config");
    write_text(
        &dir.join("cfg.toml"),
        "m = 16\nn = 32\nlevels = [2]\ntrials = 1\nalgs = [\"gpnp-l\"]\nseed = 4\n",
    )
    .unwrap();

    run_ok(
        bin()
            .arg("--config")
            .arg(dir.join("cfg.toml"))
            .args(["bench", "cs", "--quiet", "--trials", "2"])
            .arg("--out")
            .arg(dir.join("out")),
    );
    let summary: serde_json::Value =
        serde_json::from_slice(&read_bytes(&dir.join("out/summary.json"))).unwrap();
    assert_eq!(summary["m"], 16, "config value not applied");
    assert_eq!(summary["trials"], 2, "flag should override the config file");
    assert_eq!(summary["master_seed"], 4);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_inputs_fail_with_clear_errors() {
    let out = bin().args(["bench", "cs", "--algs", "nope", "--quiet"]).output().unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("nope"), "error should name the bad algorithm: {msg}");

    let out = bin().args(["--workers", "0", "bench", "dsm", "--sizes", "16"]).output().unwrap();
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("at least 1"), "error should reject zero workers: {msg}");
}
