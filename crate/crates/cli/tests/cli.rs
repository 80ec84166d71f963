use std::fs;
use std::process::{Command, Output};

use eivreg::{solve_optimal, Matrix, NoiseModel, RngSpec};
use eivreg_cli::io::{parse_matrix_csv, parse_spectrum_csv, vector_csv};
use tempfile::TempDir;

fn eivreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eivreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn solve(matrix: &str, rhs: &str, p: &str, q: &str, method: &str) -> Output {
    eivreg(&[
        "solve", "--matrix", matrix, "--rhs", rhs, "--a", "1", "--p", p, "--q", q, "--method",
        method,
    ])
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn identity_noiseless_returns_rhs() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0\n0,1\n");
    let y = write(&dir, "y.csv", "0.25\n-3.5\n");
    let out = solve(&a, &y, "0", "0", "optimal");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(data_lines(&text), ["0.25", "-3.5"]);
    assert!(text.contains("# theta: 1"));
    assert!(text.contains("# s: 0"));
}

#[test]
fn solve_writes_solution_file() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "2,0\n0,4\n1,1\n");
    let y = write(&dir, "y.csv", "1,2,3\n");
    let sol = dir.path().join("x.csv");
    let out = eivreg(&[
        "solve",
        "--matrix",
        &a,
        "--rhs",
        &y,
        "--a",
        "1",
        "--p",
        "0.5",
        "--q",
        "0.2",
        "--method",
        "tikhonov:0.1",
        "--out",
        sol.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let written = fs::read_to_string(&sol).unwrap();
    assert_eq!(written.lines().count(), 2);
    let text = stdout(&out);
    assert!(text.lines().all(|l| l.starts_with("# ")), "{text}");
    for key in [
        "theta", "s", "alpha", "t", "risk", "risk_opt", "risk_std", "method",
    ] {
        assert!(text.contains(&format!("# {key}: ")), "missing {key}");
    }
}

#[test]
fn malformed_cell_is_input_error() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0\n0,abc\n");
    let y = write(&dir, "y.csv", "1\n2\n");
    let out = solve(&a, &y, "0", "0", "optimal");
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains("row 2, column 2"), "{msg}");
    assert!(msg.contains("abc"), "{msg}");
}

#[test]
fn dimension_mismatch_is_input_error() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0\n0,1\n");
    let y = write(&dir, "y.csv", "1\n2\n3\n");
    let out = solve(&a, &y, "0.1", "0.1", "optimal");
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn invalid_parameters_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0\n0,1\n");
    let y = write(&dir, "y.csv", "1\n2\n");
    assert_eq!(solve(&a, &y, "-1", "0", "optimal").status.code(), Some(2));
    assert_eq!(solve(&a, &y, "0", "0", "bogus").status.code(), Some(2));
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        solve(missing.to_str().unwrap(), &y, "0", "0", "optimal")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numeric_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "1,0\n0,1\n");
    let y = write(&dir, "y.csv", "1\n2\n");
    let out = solve(&a, &y, "0.5", "0.2", "confluent:1");
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));

    let singular = write(&dir, "s.csv", "1,1\n1,1\n");
    let out = solve(&singular, &y, "0", "0", "optimal");
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn solve_matches_library_bitwise() {
    let dir = TempDir::new().unwrap();
    let model = NoiseModel::new(1.0, 0.5, 0.2, 4, 6).unwrap();
    let sample = model.sample(RngSpec::new(2024, 7));
    let a = write(&dir, "a.csv", &matrix_csv(&sample.r));
    let y = write(&dir, "y.csv", &vector_csv(&sample.y));

    let r = parse_matrix_csv(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(r, sample.r);
    let expected = solve_optimal(&sample.r, &sample.y, &model.derived()).unwrap();

    let out = solve(&a, &y, "0.5", "0.2", "optimal");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let got: Vec<f64> = data_lines(&text)
        .iter()
        .map(|l| l.parse().unwrap())
        .collect();
    let got_bits: Vec<u64> = got.iter().map(|v| v.to_bits()).collect();
    let want_bits: Vec<u64> = expected.as_slice().iter().map(|v| v.to_bits()).collect();
    assert_eq!(got_bits, want_bits);
}

#[test]
fn json_matrix_input() {
    let dir = TempDir::new().unwrap();
    let a = write(
        &dir,
        "a.json",
        r#"{"rows": 2, "cols": 2, "data": [1, 0, 0, 1]}"#,
    );
    let y = write(&dir, "y.json", r#"{"rows": 2, "cols": 1, "data": [4, 5]}"#);
    let out = solve(&a, &y, "0", "0", "standard");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(data_lines(&stdout(&out)), ["4", "5"]);

    let bad = write(
        &dir,
        "b.json",
        r#"{"rows": 2, "cols": 2, "data": [1, 0, 0]}"#,
    );
    assert_eq!(solve(&bad, &y, "0", "0", "standard").status.code(), Some(2));
}

fn mc(extra: &[&str]) -> Output {
    let mut args = vec!["mc"];
    args.extend_from_slice(extra);
    eivreg(&args)
}

#[test]
fn mc_noiseless_rows_are_zero() {
    let out = mc(&[
        "--a",
        "1",
        "--p",
        "0",
        "--q",
        "0",
        "--n",
        "3",
        "--N",
        "6",
        "--trials",
        "50",
        "--samples",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("filter,empirical_mean,stderr,theory,z_score")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert!(cols[1].parse::<f64>().unwrap() <= 1e-20, "{row}");
        assert_eq!(cols[3], "0", "{row}");
    }
}

#[test]
fn mc_is_byte_deterministic() {
    let args = [
        "--a",
        "1",
        "--p",
        "0.5",
        "--q",
        "0.2",
        "--n",
        "5",
        "--N",
        "9",
        "--trials",
        "300",
        "--samples",
        "100",
        "--seed",
        "11",
        "--filters",
        "optimal,tikhonov:0.3,standard",
    ];
    let first = mc(&args);
    let second = mc(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);

    let mut other = args.to_vec();
    other[15] = "12";
    assert_ne!(mc(&other).stdout, first.stdout);
}

#[test]
fn mc_json_output() {
    let out = mc(&[
        "--a",
        "1",
        "--p",
        "0.5",
        "--q",
        "0.2",
        "--n",
        "3",
        "--N",
        "5",
        "--trials",
        "100",
        "--samples",
        "50",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["filter"], "optimal");
    assert!(rows[0]["z_score"].is_number());
}

#[test]
fn mc_rejects_bad_model() {
    let out = mc(&[
        "--a", "0", "--p", "0", "--q", "0", "--n", "3", "--N", "6", "--trials", "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = mc(&[
        "--a",
        "1",
        "--p",
        "0",
        "--q",
        "0",
        "--n",
        "3",
        "--N",
        "6",
        "--trials",
        "10",
        "--filters",
        "nope",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_counts_and_round_trips() {
    let out = eivreg(&[
        "spectrum",
        "--a",
        "1",
        "--p",
        "0",
        "--n",
        "1",
        "--N",
        "1",
        "--samples",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(data_lines(&text).len(), 4);
    assert!(text.contains("# oracle: divergent regime"));

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("spec.csv");
    let out = eivreg(&[
        "spectrum",
        "--a",
        "1",
        "--p",
        "0.5",
        "--n",
        "4",
        "--N",
        "9",
        "--samples",
        "25",
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let written = fs::read_to_string(&path).unwrap();
    let spec = parse_spectrum_csv(&written).unwrap();
    assert_eq!((spec.n(), spec.samples()), (4, 25));
    let model = NoiseModel::new(1.0, 0.5, 0.0, 4, 9).unwrap();
    let direct = eivreg::pool_spectrum(&model, 25, RngSpec::new(3, 0)).unwrap();
    assert_eq!(spec, direct);
    assert!(!written.contains("divergent"));
    assert!(written.contains("# oracle: "));
}

#[test]
fn risk_table() {
    let out = eivreg(&[
        "risk",
        "--a",
        "1",
        "--p",
        "0.5",
        "--q",
        "0.2",
        "--n",
        "4",
        "--N",
        "8",
        "--samples",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("filter,theory,stderr,gap_vs_opt"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][3], "0");
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() >= 0.0));
}

fn sweep(dir: &TempDir, config: &str) -> Output {
    let path = write(dir, "sweep.json", config);
    eivreg(&["sweep", "--config", &path])
}

fn sweep_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("a,p,q,n,N,filter,theory,empirical,stderr,gap_vs_opt")
    );
    lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn sweep_noiseless_cell() {
    let dir = TempDir::new().unwrap();
    let out = sweep(
        &dir,
        r#"{"a": 1, "p": 0, "q": 0, "n": 3, "N": 5, "trials": 20, "spectrum_samples": 10}"#,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = sweep_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[9], "0");
        assert_eq!(r[6], "0");
    }
}

#[test]
fn sweep_to_square_systems() {
    let dir = TempDir::new().unwrap();
    let out = sweep(
        &dir,
        r#"{"a": 1, "p": [0.5, 1.0], "q": 0.2, "n": [2, 5, 8, 10], "N": 10,
            "filters": ["optimal", "tikhonov", "standard"], "trials": 200, "spectrum_samples": 100}"#,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = sweep_rows(&stdout(&out));
    assert_eq!(rows.len(), 2 * 4 * 3);
    for r in &rows {
        assert!(
            r[9] == "inf" || r[9].parse::<f64>().unwrap() >= 0.0,
            "{r:?}"
        );
        assert!(r[7].parse::<f64>().unwrap().is_finite(), "{r:?}");
        if r[5] == "optimal" {
            let v: f64 = r[6].parse().unwrap();
            assert!(v > 0.0 && v <= 1.0);
        }
    }
}

#[test]
fn sweep_prints_inf_for_zero_eigenvalue() {
    let dir = TempDir::new().unwrap();
    // Rank-deficient draws (n > N) put exact zeros in every pooled spectrum.
    let out = sweep(
        &dir,
        r#"{"a": 1, "p": 0.5, "q": 0.2, "n": 4, "N": 2, "trials": 50, "spectrum_samples": 20}"#,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = sweep_rows(&stdout(&out));
    let std = rows.iter().find(|r| r[5] == "standard").unwrap();
    assert_eq!(std[6], "inf");
    assert_eq!(std[9], "inf");
    assert!(std[7].parse::<f64>().unwrap().is_finite());
}

#[test]
fn sweep_unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let out = sweep(
        &dir,
        r#"{"a": 1, "p": 0, "q": 0, "n": 3, "N": 5, "bogus": 1}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(eivreg(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(eivreg(&["mc", "--a", "1"]).status.code(), Some(2));
}

#[test]
fn vector_as_row_or_column() {
    let dir = TempDir::new().unwrap();
    let a = write(&dir, "a.csv", "# comment\n3,0\n0,2\n");
    let col = write(&dir, "col.csv", "3\n4\n");
    let row = write(&dir, "row.csv", "3,4\n");
    let by_col = solve(&a, &col, "0", "0", "standard");
    let by_row = solve(&a, &row, "0", "0", "standard");
    assert_eq!(by_col.stdout, by_row.stdout);
    assert_eq!(data_lines(&stdout(&by_col)), ["1", "2"]);
    let grid = write(&dir, "grid.csv", "1,2\n3,4\n");
    assert_eq!(
        solve(&a, &grid, "0", "0", "standard").status.code(),
        Some(2)
    );
}
