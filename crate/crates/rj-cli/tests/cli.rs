//! End-to-end tests of the `rj` binary: exit-code contract, echo round-trip,
//! and the validation suite. CSV determinism lives in `tests/acceptance.rs`.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(text.as_bytes()).unwrap();
    path
}

fn rj(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rj"));
    cmd.args(args);
    cmd.env_remove("RJ_DEFAULT_TOL");
    cmd.env_remove("RJ_TEST_CORRUPT_HERMITICITY");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const SINGLE_SITE: &str = "\
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
";

fn current_config(methods: &str) -> String {
    format!("{SINGLE_SITE}[run]\nmode = current\nmethods = {methods}\n")
}

#[test]
fn current_happy_path_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum,trace_integral"));
    let out = rj(&["current", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "param_name,param_value,method,current,error_estimate,diag_panels,diag_residual,error");
    assert_eq!(rows.len(), 3);
    let value = |row: &str| row.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    let (a, b) = (value(rows[1]), value(rows[2]));
    assert!(a != 0.0, "test junction must carry current");
    assert!((a - b).abs() <= 1e-8 * a.abs(), "pole_sum {a} vs trace_integral {b}");
}

#[test]
fn zero_bias_reports_zero_and_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    let text = current_config("pole_sum,trace_integral,small_gamma,large_gamma")
        .replace("mu_L = 0.25", "mu_L = 0.1")
        .replace("mu_R = -0.25", "mu_R = 0.1");
    let cfg = write_config(&dir, "run.ini", &text);
    let out = rj(&["current", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    for row in stdout_str(&out).lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v = row.split(',').nth(3).unwrap().parse::<f64>().unwrap();
        assert!(v.abs() < 1e-12, "row: {row}");
    }
}

#[test]
fn pole_sum_on_nonidentical_leads_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = current_config("pole_sum").replacen("gamma = 0.05", "gamma = 0.07", 1);
    let cfg = write_config(&dir, "run.ini", &text);
    let out = rj(&["current", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_str(&out).contains("ERROR usage: identical reservoirs required"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn parse_error_exits_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = current_config("pole_sum").replace("eps0", "epsilon_nought");
    let cfg = write_config(&dir, "run.ini", &text);
    let out = rj(&["current", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.starts_with("ERROR parse:"), "stderr: {err}");
    assert!(err.contains("line 3"), "stderr: {err}");
}

#[test]
fn subcommand_config_mode_mismatch_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum"));
    let out = rj(&["sweep", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).starts_with("ERROR usage:"));
}

#[test]
fn sweep_with_unsolvable_cell_exits_2_keeping_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SINGLE_SITE}[run]\nmode = sweep\nsweep_parameter = reservoir_size\nsweep_values = 8,1200\nmethods = oracle_sylvester,pole_sum\n"
    );
    let cfg = write_config(&dir, "sweep.ini", &text);
    let out = rj(&["sweep", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    // the oversized oracle cell records its failure in the error column
    let failed: Vec<&&str> = rows.iter().filter(|r| r.split(',').nth(3).unwrap().is_empty()).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("oracle_sylvester"));
    // every other cell still has a value
    assert_eq!(rows.iter().filter(|r| !r.split(',').nth(3).unwrap().is_empty()).count(), 3);
}

#[test]
fn converge_emits_monotone_errors() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "{SINGLE_SITE}[run]\nmode = converge\nconverge_sizes = 32,64,128\ngamma_rule = over_size:8\n"
    );
    let cfg = write_config(&dir, "conv.ini", &text);
    let out = rj(&["converge", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,method,current,landauer_current,landauer_abs_err,landauer_rel_err,spacing_over_gamma,error");
    let rel_errs: Vec<f64> = rows[1..]
        .iter()
        .filter(|r| r.split(',').nth(1).unwrap() == "pole_sum")
        .map(|r| r.split(',').nth(5).unwrap().parse::<f64>().unwrap())
        .collect();
    assert_eq!(rel_errs.len(), 3);
    assert!(rel_errs[2] < rel_errs[0], "{rel_errs:?}");
}

#[test]
fn validate_passes_on_clean_junction() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SINGLE_SITE}[run]\nmode = validate\n");
    let cfg = write_config(&dir, "val.ini", &text);
    let out = rj(&["validate", "--config", cfg.to_str().unwrap(), "--seed", "7"], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    assert!(text.contains("resolvent_identity"));
    assert!(text.contains("random_oracle_4"));
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn validate_corrupted_hermiticity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SINGLE_SITE}[run]\nmode = validate\n");
    let cfg = write_config(&dir, "val.ini", &text);
    let out = rj(
        &["validate", "--config", cfg.to_str().unwrap()],
        &[("RJ_TEST_CORRUPT_HERMITICITY", "1")],
    );
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_str(&out));
    assert!(stdout_str(&out).contains("hamiltonian_hermitian"));
    assert!(stderr_str(&out).starts_with("ERROR validation:"));
}

#[test]
fn validate_nonidentical_skips_identical_check() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SINGLE_SITE}[run]\nmode = validate\n").replacen("gamma = 0.05", "gamma = 0.08", 1);
    let cfg = write_config(&dir, "val.ini", &text);
    let out = rj(&["validate", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    assert!(text.contains("skipped (precondition"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn echo_block_round_trips_through_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum"));
    let out = rj(&["current", "--config", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let echoed: String = stdout_str(&out)
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    let original = rj_cli::config::parse_config(&current_config("pole_sum")).unwrap();
    let round_tripped = rj_cli::config::parse_config(&echoed).unwrap();
    assert_eq!(original, round_tripped);
}

#[test]
fn rel_tol_precedence_flag_config_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum"));
    let path = cfg.to_str().unwrap();
    let echoed_tol = |out: &Output| -> String {
        stdout_str(out)
            .lines()
            .find(|l| l.starts_with("# rel_tol"))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .trim()
            .to_string()
    };

    // built-in default
    let out = rj(&["current", "--config", path], &[]);
    assert_eq!(echoed_tol(&out), "0.00000001");
    // env overrides default
    let out = rj(&["current", "--config", path], &[("RJ_DEFAULT_TOL", "1e-6")]);
    assert_eq!(echoed_tol(&out), "0.000001");
    // config key overrides env
    let with_key = current_config("pole_sum").replace("[run]", "[quadrature]\nrel_tol = 1e-7\n[run]");
    let cfg2 = write_config(&dir, "run2.ini", &with_key);
    let out = rj(&["current", "--config", cfg2.to_str().unwrap()], &[("RJ_DEFAULT_TOL", "1e-6")]);
    assert_eq!(echoed_tol(&out), "0.0000001");
    // flag overrides config
    let out = rj(
        &["current", "--config", cfg2.to_str().unwrap(), "--rel-tol", "1e-9"],
        &[("RJ_DEFAULT_TOL", "1e-6")],
    );
    assert_eq!(echoed_tol(&out), "0.000000001");
}

#[test]
fn dump_correlations_writes_matrix_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum"));
    let dump = dir.path().join("c.csv");
    let out = rj(
        &["current", "--config", cfg.to_str().unwrap(), "--dump-correlations", dump.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = std::fs::read_to_string(&dump).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,col,re,im"));
    // 1 system site + 2 x 12 modes = 25; the dump is the full 25 x 25 matrix
    assert_eq!(lines.count(), 25 * 25);
}

#[test]
fn out_flag_writes_file_identical_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "run.ini", &current_config("pole_sum"));
    let path = cfg.to_str().unwrap();
    let to_stdout = rj(&["current", "--config", path], &[]);
    let out_file = dir.path().join("result.csv");
    let to_file = rj(&["current", "--config", path, "--out", out_file.to_str().unwrap()], &[]);
    assert_eq!(to_file.status.code(), Some(0));
    assert_eq!(std::fs::read(&out_file).unwrap(), to_stdout.stdout);
}

#[test]
fn missing_config_flag_exits_1() {
    let out = rj(&["current"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--config"));
}
