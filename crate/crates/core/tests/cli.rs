use std::fs;
use std::path::{Path, PathBuf};

use photonsub::cli::{main_with_args, EXIT_OK, EXIT_ORACLE, EXIT_PARSE};

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["photonsub"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn run_to_string(args: &[&str]) -> (i32, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let mut full = args.to_vec();
    let out_str = out.to_str().unwrap().to_owned();
    full.extend_from_slice(&["--out", &out_str]);
    let code = run(&full);
    (code, fs::read_to_string(&out).unwrap_or_default())
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn sweep_writes_header_and_one_row_per_step() {
    let cfg = shipped("plus_state_sweep.toml");
    let (code, text) = run_to_string(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_value,F,R,P_m,bound_general,bound_vacuum,parity_class,oracle_F,norm_deficit"
    );
    assert_eq!(lines.count(), 60);
}

#[test]
fn sweep_output_is_deterministic() {
    let cfg = shipped("cccs_two_mode.toml");
    let a = run_to_string(&["sweep", "--config", cfg.to_str().unwrap()]);
    let b = run_to_string(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(a.0, EXIT_OK);
    assert_eq!(a, b);
}

#[test]
fn oracle_columns_agree_with_kernel() {
    let cfg = shipped("odd_cat_oracle.toml");
    let (code, text) = run_to_string(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let f: f64 = rec[1].parse().unwrap();
        let fo: f64 = rec[7].parse().unwrap();
        assert!((f - fo).abs() < 1e-6, "{f} vs {fo}");
        rows += 1;
    }
    assert_eq!(rows, 14);
}

#[test]
fn vacuum_heralds_no_photons() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[state.covariance]
matrix = [[0.5, 0.0], [0.0, 0.5]]

[subtraction]
tau = 0.1
pattern = [1]

[target]
kind = "cat_odd"
gamma_q = 0.3
"#,
    );
    let (code, text) = run_to_string(&[
        "prob",
        "--max-photons",
        "3",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "pattern,M,P_m");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "0");
    assert!((fields[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn malformed_config_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[state.hamiltonian]
g_matrix = [[1]]
r = 1.0

[subtraction]
tau = [0.1, 0.2]
pattern = [1]

[target]
kind = "cat_odd"
gamma_q = 0.3
"#,
    );
    assert_eq!(
        run(&["fidelity", "--config", cfg.to_str().unwrap()]),
        EXIT_PARSE
    );
    assert_eq!(
        run(&["fidelity", "--config", "/nonexistent/exp.toml"]),
        EXIT_PARSE
    );
}

#[test]
fn usage_errors_exit_with_parse_code() {
    assert_eq!(run(&["fidelity"]), EXIT_PARSE);
    assert_eq!(run(&["no-such-command"]), EXIT_PARSE);
    let cfg = shipped("ghz_search.toml");
    assert_eq!(
        run(&["sweep", "--config", cfg.to_str().unwrap()]),
        EXIT_PARSE
    );
}

#[test]
fn insufficient_cutoff_is_an_oracle_disagreement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[state.hamiltonian]
g_matrix = [[1]]
r = 1.0

[subtraction]
tau = 0.05
pattern = [2]

[target]
kind = "cat_even"
gamma_q = 0.8

[oracle]
enabled = true
cutoff = 4
"#,
    );
    let (code, text) = run_to_string(&["oracle-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_ORACLE);
    assert!(text.starts_with("case,F_kernel,F_fock"));
}

#[test]
fn default_oracle_grid_agrees() {
    let (code, text) = run_to_string(&["oracle-check"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.lines().count() > 1);
}

#[test]
fn bound_reports_named_quantities() {
    let cfg = shipped("cccs_two_mode.toml");
    let (code, text) = run_to_string(&["bound", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(text.starts_with("quantity,value"));
    assert!(text.lines().any(|l| l.starts_with("bound_general,")));
}
