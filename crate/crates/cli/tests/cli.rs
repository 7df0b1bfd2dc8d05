use std::path::Path;
use std::process::{Command, Output};

fn dynest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynest"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bounds_writes_one_row_per_t() {
    let o = dynest(&[
        "bounds",
        "--model",
        "geometric:1,0.9",
        "--n",
        "100000",
        "--h",
        "0.01",
        "--beta",
        "0",
        "--cK",
        "2",
        "--t-grid",
        "0:20:11",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# spec: "));
    assert_eq!(lines.next().unwrap(), "t,raw_bound,clipped_bound");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for w in rows.windows(2) {
        assert!(w[1][1] <= w[0][1]);
    }
    assert!(rows.iter().all(|r| r[2] <= 1.0 && r[2] <= r[1]));
}

#[test]
fn bad_model_is_rejected() {
    let o = dynest(&[
        "bounds",
        "--model",
        "geometric:1,1.5",
        "--n",
        "10",
        "--h",
        "0.1",
        "--beta",
        "0",
        "--cK",
        "2",
        "--t-grid",
        "0:1:2",
    ]);
    assert!(!o.status.success());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "system = \"gauss\"\nn = 4000\nh = 0.05\ngrid = 9\nseed = 3\n").unwrap();
    let o = dynest(&["estimate", "--config", cfg.to_str().unwrap(), "--grid", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("\"system\":\"gauss\""));
    assert_eq!(text.lines().count(), 2 + 4);
}

#[test]
fn table_reports_bad_rows_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.toml");
    std::fs::write(
        &table,
        "[defaults]\nn = 3000\nh = 0.02\ngrid = 20\n\n[[spec]]\nsystem = \"beta:27/11\"\n\n[[spec]]\nsystem = \"beta:0.5\"\n\n[[spec]]\nsystem = \"gauss\"\n",
    )
    .unwrap();
    let out = dir.path().join("rows.csv");
    let o = dynest(&["table", table.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[2].ends_with(",ok"));
    assert!(lines[3].contains("error"));
    assert!(lines[4].ends_with(",ok"));
}

#[test]
fn regularity_lists_components() {
    let o = dynest(&["regularity", "--system", "beta:27/11", "--u", "0.05", "--h", "0.01"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().nth(1).unwrap(), "component,lower_x,upper_x");
    assert!(text.lines().count() > 2);
}

#[test]
fn sweep_ends_with_fit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = dynest(&[
        "sweep",
        "--system",
        "beta:27/11",
        "--xi",
        "0.3",
        "--n-list",
        "1000,4000,16000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(Path::new(&out)).unwrap();
    assert!(text.lines().last().unwrap().starts_with("fit,"));
}

#[test]
fn paper_suite_exit_code_reflects_gates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("suite.csv");
    let hist = dir.path().join("hist.csv");
    let o = dynest(&[
        "paper-suite",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
        "--histograms",
        hist.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let gate_fail = text.lines().skip(2).any(|l| l.ends_with(",true,false"));
    assert_eq!(o.status.code(), Some(if gate_fail { 2 } else { 0 }));
    assert!(std::fs::read_to_string(&hist)
        .unwrap()
        .starts_with("coordinate,bin_lower"));
}
