use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn affine_text() -> String {
    fs::read_to_string(configs().join("affine1d.toml")).unwrap()
}

fn pacabs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacabs")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = pacabs(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn pipeline(cfg: &str, out: &Path, threads: &str) {
    let o = out.to_str().unwrap();
    let common = ["--config", cfg, "--out", o, "--threads", threads];
    for cmd in ["abstract", "synthesize", "simulate", "validate"] {
        let mut args = vec![cmd];
        args.extend(common);
        run_ok(&args);
    }
}

#[test]
fn pipeline_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine1d.toml");
    let cfg = cfg.to_str().unwrap();
    pipeline(cfg, &dir.path().join("a"), "1");
    pipeline(cfg, &dir.path().join("b"), "3");
    for f in ["abstraction.pacabs", "abstraction.config", "controller.pacctl", "traces.csv", "validation.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn outputs_embed_config_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine1d.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("o");
    pipeline(cfg, &out, "1");
    let info = run_ok(&["info", "--config", cfg, "--out", out.to_str().unwrap()]);
    let sum = info.lines().next().unwrap().split_whitespace().nth(1).unwrap().to_string();
    assert_eq!(sum.len(), 64);
    let ctl = fs::read_to_string(out.join("controller.pacctl")).unwrap();
    assert!(ctl.lines().nth(2).unwrap() == format!("config {sum}"));
    for f in ["traces.csv", "validation.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next().unwrap(), format!("# config {sum}"));
    }
    assert_eq!(fs::read_to_string(out.join("abstraction.config")).unwrap(), format!("config {sum}\n"));
    assert!(info.contains("controller 14 winning cells"), "{info}");
}

#[test]
fn report_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine1d.toml");
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("o");
    pipeline(cfg, &out, "1");
    let val = fs::read_to_string(out.join("validation.csv")).unwrap();
    let rows = val.lines().filter(|l| !l.starts_with('#') && !l.starts_with('q')).count();
    assert_eq!(rows, 20 * 5);
    let traces = fs::read_to_string(out.join("traces.csv")).unwrap();
    assert_eq!(traces.lines().nth(1).unwrap(), "trial,step,x1,u1,outcome");
}

#[test]
fn mixing_configs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine1d.toml");
    let cfg = cfg.to_str().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    run_ok(&["abstract", "--config", cfg, "--out", o]);
    let other = pacabs(&["synthesize", "--config", cfg, "--out", o, "--seed", "5"]);
    assert_eq!(code(&other), 2);
    run_ok(&["synthesize", "--config", cfg, "--out", o]);
    let other = pacabs(&["simulate", "--config", cfg, "--out", o, "--seed", "5"]);
    assert_eq!(code(&other), 2);
    // Threads and output directory are not part of the checksum.
    run_ok(&["simulate", "--config", cfg, "--out", o, "--threads", "2"]);
}

#[test]
fn missing_inputs_and_bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("empty");
    let o = o.to_str().unwrap();
    let cfg = configs().join("affine1d.toml");
    assert_eq!(code(&pacabs(&["synthesize", "--config", cfg.to_str().unwrap(), "--out", o])), 2);
    assert_eq!(code(&pacabs(&["info", "--config", "/nonexistent.toml"])), 2);

    let tight = write_config(dir.path(), "tight.toml", &affine_text().replace("epsilon = 0.05", "epsilon = 0.01"));
    let out = pacabs(&["abstract", "--config", &tight, "--out", o]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0.025") && err.contains("0.01"), "{err}");

    let bogus = write_config(dir.path(), "bogus.toml", &format!("{}\n[extra]\nx = 1\n", affine_text()));
    assert_eq!(code(&pacabs(&["info", "--config", &bogus])), 2);
}

#[test]
fn empty_winning_set_exits_4_only_when_required() {
    let dir = tempfile::tempdir().unwrap();
    let text = affine_text().replace("lower = [0.8], upper = [1.0]", "lower = [0.81], upper = [0.84]");
    let cfg = write_config(dir.path(), "narrow.toml", &text);
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    run_ok(&["abstract", "--config", &cfg, "--out", o]);
    let plain = run_ok(&["synthesize", "--config", &cfg, "--out", o]);
    assert!(plain.contains("controllable fraction 0.000000"));
    assert_eq!(code(&pacabs(&["synthesize", "--config", &cfg, "--out", o, "--require-nonempty"])), 4);
    assert_eq!(code(&pacabs(&["simulate", "--config", &cfg, "--out", o, "--trials", "10"])), 4);
    let val = run_ok(&["validate", "--config", &cfg, "--out", o]);
    assert!(val.contains("empty winning set"));
}

#[test]
fn system_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = affine_text().replace("a = 1.0\nb = 1.0", "a = 1.7e308\nb = 1e308");
    let cfg = write_config(dir.path(), "huge.toml", &text);
    let o = dir.path().join("o");
    assert_eq!(code(&pacabs(&["abstract", "--config", &cfg, "--out", o.to_str().unwrap()])), 3);
}

#[test]
fn simulate_fixed_states_and_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("affine1d.toml");
    let cfg = cfg.to_str().unwrap();
    let o = dir.path().join("o");
    let o = o.to_str().unwrap();
    run_ok(&["abstract", "--config", cfg, "--out", o]);
    run_ok(&["synthesize", "--config", cfg, "--out", o]);
    let out = run_ok(&["simulate", "--config", cfg, "--out", o, "--x0", "0.5", "--x0", "0.42"]);
    assert!(out.contains("x0 = [0.5]: reached@"), "{out}");
    assert!(out.contains("x0 = [0.42]: obstacle0@0"), "{out}");
    let out = run_ok(&["simulate", "--config", cfg, "--out", o, "--x0", "0.37"]);
    assert!(out.contains("x0 = [0.37]: refused"), "{out}");
    assert_eq!(code(&pacabs(&["simulate", "--config", cfg, "--out", o, "--x0", "0.1,0.2"])), 2);
}

#[test]
fn info_prints_sample_sizes() {
    let desk = configs().join("vessel_desk.toml");
    let out = run_ok(&["info", "--config", desk.to_str().unwrap(), "--out", "/nonexistent-dir"]);
    assert!(out.contains("M         2893"), "{out}");
    assert!(out.contains("horizon   24 steps"));
    let full = configs().join("vessel_paper.toml");
    let out = run_ok(&["info", "--config", full.to_str().unwrap(), "--out", "/nonexistent-dir"]);
    assert!(out.contains("M         23655"), "{out}");
    assert!(out.contains("n_x       3375") && out.contains("n_u       64"));
}
