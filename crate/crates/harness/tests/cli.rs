//! Black-box tests of the `pilotforge` binary.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[network]
num_cells = 3
users_per_cell = 2
antennas = 16

[experiment]
algorithms = ["nonorth_fp", "orth_fp", "maxmin_fp", "baseline_orthogonal",
              "baseline_random", "lower_bound", "smart_assignment"]
trials = 3
tau = [2, 4]
seed = 11
nonorth_max_iters = 15
orth_max_iters = 15
maxmin_max_inner = 20
"#;

fn pilotforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilotforge"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn run_small(dir: &Path) -> Output {
    let config = dir.join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = dir.join("out");
    pilotforge(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

/// Header and records of a CSV file.
fn read(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name} in {header:?}"))
}

/// Rows with timing columns blanked, for run-to-run comparison.
fn without_timing(path: &Path) -> Vec<Vec<String>> {
    let (header, mut rows) = read(path);
    let timing: Vec<usize> = ["wall_ms", "elapsed_ms"]
        .iter()
        .filter_map(|n| header.iter().position(|h| h == n))
        .collect();
    for row in &mut rows {
        for &i in &timing {
            row[i].clear();
        }
    }
    rows
}

#[test]
fn run_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_small(dir.path());
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let out = dir.path().join("out");

    let (header, rows) = read(&out.join("summary.csv"));
    assert_eq!(
        header,
        [
            "trial",
            "tau",
            "algorithm",
            "weighted_sum_mse",
            "weighted_sum_mse_db",
            "db_above_lower_bound",
            "min_rate",
            "sum_rate",
            "iterations",
            "wall_ms"
        ]
    );
    assert_eq!(rows.len(), 3 * 2 * 7);

    for name in ["weighted_sum_mse_db", "min_rate", "sum_rate"] {
        let (header, _) = read(&out.join(format!("cdf_{name}.csv")));
        assert_eq!(header, ["algorithm", "tau", "rank", "value", "percentile"]);
    }

    for algo in ["nonorth_fp", "orth_fp", "maxmin_fp"] {
        let (header, rows) = read(&out.join(format!("trace_{algo}.csv")));
        for col in ["iter", "objective", "option", "elapsed_ms"] {
            column(&header, col);
        }
        assert!(!rows.is_empty());
        let iter = column(&header, "iter");
        assert!(rows.iter().any(|r| r[iter] == "0"));
    }

    for algo in ["orth_fp", "maxmin_fp", "baseline_orthogonal", "smart_assignment"] {
        let (header, rows) = read(&out.join(format!("assignment_{algo}.csv")));
        for col in ["trial", "tau", "cell", "user", "pilot_index", "power_mw"] {
            column(&header, col);
        }
        // 3 trials x 2 tau values x 6 users.
        assert_eq!(rows.len(), 36, "{algo}");
    }
}

#[test]
fn decibel_columns_agree_with_linear_ones() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path()).status.success());
    let (header, rows) = read(&dir.path().join("out/summary.csv"));
    let (lin, db, algo) = (
        column(&header, "weighted_sum_mse"),
        column(&header, "weighted_sum_mse_db"),
        column(&header, "algorithm"),
    );
    let above = column(&header, "db_above_lower_bound");
    for row in &rows {
        let l: f64 = row[lin].parse().unwrap();
        let d: f64 = row[db].parse().unwrap();
        assert!((10.0 * l.log10() - d).abs() < 1e-9, "{row:?}");
        let gap: f64 = row[above].parse().unwrap();
        assert!(gap >= -1e-9, "{row:?}");
        if row[algo] == "lower_bound" {
            assert!(gap.abs() < 1e-12);
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_small(a.path()).status.success());
    assert!(run_small(b.path()).status.success());
    for file in ["summary.csv", "trace_nonorth_fp.csv", "assignment_orth_fp.csv"] {
        assert_eq!(
            without_timing(&a.path().join("out").join(file)),
            without_timing(&b.path().join("out").join(file)),
            "{file}"
        );
    }
}

#[test]
fn sweep_uses_the_given_pilot_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, SMALL).unwrap();
    let out = dir.path().join("sweep");
    let output = pilotforge(&[
        "sweep",
        "--tau",
        "3,5",
        "--config",
        config.to_str().unwrap(),
        "--algo",
        "baseline_random",
        "--algo",
        "lower_bound",
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let (header, rows) = read(&out.join("summary.csv"));
    let tau = column(&header, "tau");
    let mut taus: Vec<&str> = rows.iter().map(|r| r[tau].as_str()).collect();
    taus.sort();
    taus.dedup();
    assert_eq!(taus, ["3", "5"]);
    assert_eq!(rows.len(), 2 * 2 * 2);
}

#[test]
fn unknown_config_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[experiment]\ntrails = 3\n").unwrap();
    let output = pilotforge(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("trails"));
}

#[test]
fn missing_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let output = pilotforge(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn invalid_values_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "[experiment]\ntrials = 0\n").unwrap();
    let output = pilotforge(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn validate_passes_with_modest_draws() {
    let output = pilotforge(&["validate", "--mse-draws", "4000", "--rate-draws", "20000"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(output.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");
}
