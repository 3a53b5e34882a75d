use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mkc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mkc")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_a_manifest_and_five_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let out = mkc(&["generate", "--recipe", "toyl", "--seed", "42", "--out", path(&d)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("manifest.txt").exists());
    for v in 0..5 {
        assert!(d.join(format!("kernel_{v}.csv")).exists());
    }
}

#[test]
fn complete_then_evaluate_prints_per_view_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let masked = dir.path().join("masked");
    let r = dir.path().join("r");
    assert!(mkc(&["generate", "--recipe", "toyg1", "--seed", "3", "--out", path(&d)]).status.success());
    let before = fs::read(d.join("kernel_0.csv")).unwrap();
    let out = mkc(&["mask", "--in", path(&d), "--seed", "4", "--missing-views", "1", "--affected-fraction", "0.5", "--out", path(&masked)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(d.join("kernel_0.csv")).unwrap(), before);

    let out = mkc(&[
        "complete", "--method", "embd-hm", "--c2", "0.1", "--max-iters", "20", "--in", path(&masked), "--out", path(&r),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["result.txt", "objective_trace.csv", "completed_0.csv", "completed_4.csv"] {
        assert!(r.join(name).exists(), "{name} missing");
    }
    let trace = fs::read_to_string(r.join("objective_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,objective,wall_ms\n0,"));

    let out = mkc(&["evaluate", "--in", path(&r)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "view,are");
    assert_eq!(lines.len(), 1 + 5 + 1);
    assert!(lines[6].starts_with("mean,"));

    let out = mkc(&["spectrum", "--in", path(&r)]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("rank,view_0,"));
}

#[test]
fn embedding_completion_writes_view_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    let masked = dir.path().join("masked");
    let r = dir.path().join("r");
    assert!(mkc(&["generate", "--recipe", "toyl", "--seed", "1", "--out", path(&d)]).status.success());
    assert!(mkc(&["mask", "--in", path(&d), "--seed", "2", "--out", path(&masked)]).status.success());
    let out = mkc(&[
        "complete", "--method", "embd-ht", "--c1", "0.1", "--c2", "0.1", "--max-iters", "5", "--clamp-known", "false",
        "--in", path(&masked), "--out", path(&r),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = fs::read_to_string(r.join("S.csv")).unwrap();
    assert_eq!(s.lines().count(), 5);
}

#[test]
fn benchmark_tables_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.cfg");
    fs::write(
        &plan,
        "recipes=toyg0.1\nrepeats=2\nmethods=embd-hm,knn,wknn\ngrid.c2=0.1,1\ngrid.k=1,3\nmax_iters=10\n",
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = mkc(&["benchmark", "--plan", path(&plan), "--seed", "9", "--out", path(out)]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert!(a.join("table_time.csv").exists());
    for name in ["table_are.csv", "are_by_view.csv", "spectra_0.csv", "spectra_4.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere");
    for args in [
        vec!["--bogus"],
        vec!["generate", "--recipe", "toyq", "--out", "x"],
        vec!["complete", "--method", "svm", "--in", "x", "--out", "y"],
        vec!["complete", "--method", "sdp", "--in", path(&missing), "--out", "y"],
        vec!["benchmark", "--plan", path(&missing), "--out", "y"],
    ] {
        let out = mkc(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    assert!(mkc(&["generate", "--recipe", "toyl", "--out", path(&d)]).status.success());
    let out = mkc(&["complete", "--method", "app", "--c1", "0", "--in", path(&d), "--out", path(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = mkc(&["mask", "--in", path(&d), "--missing-views", "5", "--out", path(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = mkc(&["mask", "--in", path(&d), "--out", path(&d)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d");
    fs::create_dir_all(&d).unwrap();
    fs::write(d.join("manifest.txt"), "n=3\nviews=1\nmask=mask.txt\nkernel.0=k.csv\n").unwrap();
    fs::write(d.join("mask.txt"), "view=0 known=0,1,2\n").unwrap();
    fs::write(d.join("k.csv"), "1,0,0\n0,1,x\n0,0,1\n").unwrap();
    let out = mkc(&["complete", "--method", "sdp", "--in", path(&d), "--out", path(&dir.path().join("r"))]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}
