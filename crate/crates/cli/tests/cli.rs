use std::path::Path;
use std::process::{Command, Output};

use netform_cli::read_snapshot;

fn netform(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netform")).args(args).current_dir(cwd).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SMALL_1D: &str = "[grid]\ndim = 1\nn = 33\n[params]\nsource = \"gaussian(0.5, 0.1, 1.0)\"\nm0 = \"bump_vector(0.3)\"\n[stepping]\ndt = 0.02\nt_end = 0.2\n";

#[test]
fn zero_run_ends_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.toml", "[grid]\ndim = 2\nn = 9\n[stepping]\ndt = 0.05\nt_end = 0.2\n");
    let out = netform(&["run", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let last = read_snapshot(&dir.path().join("res/traj/snap_000004.nwf")).unwrap();
    assert_eq!(last.time, 0.2);
    assert!(last.p.values().iter().chain(last.m.component(0).values()).all(|v| *v == 0.0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("status completed"));
}

#[test]
fn lemma_check_prints_threshold_and_sequence() {
    let dir = tempfile::tempdir().unwrap();
    let out = netform(&["lemma-check", "ynb", "--c", "1", "--b", "2", "--alpha", "1", "--y0", "0.5", "--out", "lem"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next().unwrap(), "threshold 5.0000000000000000e-1");
    let seq: Vec<f64> = lines
        .filter_map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            f[0].parse::<usize>().ok().map(|_| f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(seq.len(), 31);
    // on the threshold orbit rounding errors double every step
    for (n, y) in seq.iter().enumerate() {
        assert!((y - 0.5f64.powi(n as i32 + 1)).abs() <= 1e-6 * y, "n={n} {y}");
    }
    assert!(seq.windows(2).all(|w| w[1] < w[0]));
    let csv = std::fs::read_to_string(dir.path().join("lem/lemma.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);

    let out = netform(&["lemma-check", "small", "--b0", "0.1", "--lambda", "1", "--alpha", "1"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("applies true") && stdout.contains("bound 1.2500000000000000e-1"), "{stdout}");
}

#[test]
fn bad_configs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("bad.toml", "[grid\ndim = 1\n"),
        ("gamma.toml", "[grid]\ndim = 1\nn = 9\n[params]\ngamma = 0.4\n"),
        ("probe.toml", "[grid]\ndim = 1\nn = 9\n[stepping]\ndt = 0.1\nt_end = 0.2\n[diagnostics]\nprobes = [[0.5, 9.0]]\nradii = [0.1]\n"),
    ];
    for (name, text) in cases {
        let cfg = write(dir.path(), name, text);
        let out = netform(&["run", "--config", &cfg, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty(), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{name}");
    }
    let out = netform(&["run", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = netform(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{SMALL_1D}cg_tol = 1e-300\n"));
    let out = netform(&["run", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn blow_up_exits_four_but_sweep_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.toml",
        &format!("{SMALL_1D}blowup_threshold = 0.01\n[sweep]\nscales = [1.0, 0.01, 0.0]\n"),
    );
    let out = netform(&["run", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("status blew_up"));
    let out = netform(&["sweep", "--config", &cfg, "--out", "s", "--workers", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let sweep = std::fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 4);
    assert!(sweep.lines().nth(1).unwrap().contains("blew_up"));
    assert!(sweep.lines().nth(3).unwrap().contains("completed"));
}

#[test]
fn diagnose_reproduces_run_reports() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_1D}[diagnostics]\nprobes = [[0.5, 0.1], [0.25, 0.1]]\nradii = [0.1, 0.2, 0.3]\ncheckpoints = [0.1, 0.2]\n");
    let cfg = write(dir.path(), "d.toml", &text);
    assert_eq!(netform(&["run", "--config", &cfg, "--out", "a"], dir.path()).status.code(), Some(0));
    let out = netform(&["diagnose", "--config", &cfg, "--traj", "a/traj", "--out", "b"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["energy.csv", "excess.csv", "oscillation.csv", "levels.csv", "scan.csv", "holder.csv", "lp.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let excess = std::fs::read_to_string(dir.path().join("b/excess.csv")).unwrap();
    assert_eq!(excess.lines().count(), 1 + 2 * 3);
}

#[test]
fn picard_subcommand_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", &format!("{SMALL_1D}[picard]\nk_max = 4\n"));
    let out = netform(&["picard", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("o/picard_trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "k,a_k,b_k,d_k,eta_k,ratio");
    assert_eq!(lines.count(), 5);
    assert!(String::from_utf8(out.stdout).unwrap().contains("plateau_ok"));
}
