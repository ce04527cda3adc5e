//! End-to-end runs of the `kvaudit` binary.

use std::path::Path;
use std::process::{Command, Output};

use kvaudit_harness::{read_results, table::RESULT_HEADER};

fn kvaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kvaudit")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn run_to(path: &Path, args: &[&str]) -> Vec<u8> {
    let mut all = args.to_vec();
    all.extend(["--no-timing", "--out", path.to_str().unwrap()]);
    let out = kvaudit(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(path).unwrap()
}

#[test]
fn golden_header_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let bytes = run_to(&dir.path().join("r.csv"), &["audit", "--mechanism", "rr", "--eps", "0.4,0.8", "--n", "20000"]);
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "preset,mechanism,auditor,epsilon,iteration,eps_lb,eps_theoretical_certified,N,alpha,mode,seed,wall_time_ms"
    );
    assert_eq!(lines[0].split(',').collect::<Vec<_>>(), RESULT_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("audit,rr,hkv,0.4,1,"));
    assert!(lines[1].ends_with(",0.4,20000,0.05,conservative,0,0"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["experiment", "pckv-grr", "--eps", "0.8,3.2", "--n", "30000", "--seed", "4,9"];
    let a = run_to(&dir.path().join("a.csv"), &args);
    let b = run_to(&dir.path().join("b.csv"), &[&args[..], &["--threads", "1"]].concat());
    let c = run_to(&dir.path().join("c.csv"), &[&args[..], &["--threads", "3"]].concat());
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = run_to(
        &dir.path().join("d.csv"),
        &["experiment", "pckv-grr", "--eps", "0.8,3.2", "--n", "30000", "--seed", "5,9"],
    );
    assert_ne!(a, d);
}

#[test]
fn preset_grid_yields_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rr.csv");
    run_to(&path, &["experiment", "rr-key", "--n", "2000"]);
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 8);
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    assert_eq!(eps, kvaudit_harness::DEFAULT_EPSILONS);
    for r in &rows {
        assert!(r.eps_lb >= 0.0);
        assert!((r.eps_theoretical_certified - r.epsilon).abs() < 1e-5);
        assert_eq!((r.n, r.seed, r.iteration), (2000, 0, 1));
    }
}

#[test]
fn csv_round_trip_keeps_emitted_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let text = String::from_utf8(run_to(&path, &["experiment", "pckv-ue-padding", "--n", "20000"])).unwrap();
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1].mechanism, "pckv-ue/nkey=3/l=2");
    for (line, row) in text.lines().skip(1).zip(&rows) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[5], kvaudit_harness::fmt_g(row.eps_lb));
        assert_eq!(cells[6], kvaudit_harness::fmt_g(row.eps_theoretical_certified));
    }
}

#[test]
fn interactive_runs_write_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let trace = dir.path().join("t.csv");
    let args = ["experiment", "cpp-ue-star-mean", "--eps", "1.6", "--n", "20000", "--iters", "3", "--trace"];
    run_to(&out, &[&args[..], &[trace.to_str().unwrap()]].concat());
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.iter().map(|r| r.iteration).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(rows.iter().all(|r| r.auditor == "mean"));
    let trace = std::fs::read_to_string(trace).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[0].starts_with("preset,mechanism,auditor,epsilon,seed,group,iteration"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("audit.conf");
    std::fs::write(&cfg, "# OUE check\nmechanism = oue\neps = 0.8\nn = 1e6\nbits = 3\nseed = 2\n").unwrap();
    let path = dir.path().join("o.csv");
    run_to(&path, &["audit", "--config", cfg.to_str().unwrap(), "--n", "10000"]);
    let rows = read_results(&path).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].mechanism.as_str(), rows[0].n, rows[0].seed), ("oue", 10000, 2));
}

#[test]
fn exit_codes() {
    let config_errors: [&[&str]; 7] = [
        &["experiment", "no-such-preset"],
        &["audit", "--eps", "1"],
        &["audit", "--mechanism", "rr", "--eps", "-1"],
        &["audit", "--mechanism", "rr", "--n", "many"],
        &["audit", "--mechanism", "cpp-ue", "--bits", "32", "--n", "100"],
        &["audit", "--mechanism", "rr", "--auditor", "skv"],
        &["audit", "--config", "/nonexistent/dir/file.conf"],
    ];
    for args in config_errors {
        let out = kvaudit(args);
        let expected = if args.contains(&"--config") { 1 } else { 2 };
        assert_eq!(code(&out), expected, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    // Near-deterministic outputs leave no outcome seen by both groups.
    let out = kvaudit(&["audit", "--mechanism", "rr", "--eps", "40", "--n", "50"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let out = kvaudit(&["audit", "--mechanism", "cpp-ue", "--bits", "18", "--n", "200", "--eps", "6", "--force"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_and_selftest() {
    let out = kvaudit(&["oracle", "pckv-ue-padding"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("pckv-ue-padding,pckv-ue/nkey=4/l=1,value,6,3.64"));
    let out = kvaudit(&["oracle", "the"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains(",configured,"));
    let out = kvaudit(&["selftest"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
