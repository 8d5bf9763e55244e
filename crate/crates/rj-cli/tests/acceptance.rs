//! Acceptance criterion 9: CSV output is byte-identical across reruns and
//! `--jobs` settings. Prints one `acceptance 9 csv_determinism: pass|fail`
//! line, matching the per-criterion reporting of the engine's acceptance
//! suite.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(text.as_bytes()).unwrap();
    path
}

fn rj(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rj"));
    cmd.args(args);
    cmd.env_remove("RJ_DEFAULT_TOL");
    cmd.env_remove("RJ_TEST_CORRUPT_HERMITICITY");
    cmd.output().unwrap()
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const SWEEP_CONFIG: &str = "\
[system]
kind = single_site
eps0 = 0.0
[lead_L]
n = 12
t_hop = 1.0
v0 = 0.2
gamma = 0.05
[lead_R]
n = 12
t_hop = 1.0
v0 = 0.2
gamma = 0.05
[fermi]
mu_L = 0.25
mu_R = -0.25
T = 0.0
[run]
mode = sweep
sweep_parameter = gamma
sweep_values = 0.02,0.05,0.1
methods = pole_sum,trace_integral
";

#[test]
fn acceptance_9_csv_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "sweep.ini", SWEEP_CONFIG);
    let path = cfg.to_str().unwrap();
    let base = rj(&["sweep", "--config", path]);
    assert_eq!(base.status.code(), Some(0), "stderr: {}", stderr_str(&base));
    let rerun = rj(&["sweep", "--config", path]);
    let jobs1 = rj(&["sweep", "--config", path, "--jobs", "1"]);
    let jobs4 = rj(&["sweep", "--config", path, "--jobs", "4"]);
    let ok = base.stdout == rerun.stdout && base.stdout == jobs1.stdout && base.stdout == jobs4.stdout;
    println!("acceptance 9 csv_determinism: {}", if ok { "pass" } else { "fail" });
    assert!(ok, "acceptance criterion 9 (csv_determinism) failed");
    // 3 values x 2 methods + header
    let rows = stdout_str(&base).lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 7);
}
