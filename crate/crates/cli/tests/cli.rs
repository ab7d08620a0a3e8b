use std::fs;
use std::process::{Command, Output};

use ppmrx_core::record::{read_csv, ReceiverKind, CSV_HEADER};

fn ppmrx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppmrx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn header() -> String {
    CSV_HEADER.join(",")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bounds_emit_all_receivers() {
    let text = stdout(&ppmrx(&["bounds", "--m", "4", "--n", "1", "--nb", "0.002"]));
    assert!(text.starts_with(&header()));
    let records = read_csv(text.as_bytes()).unwrap();
    let kinds: Vec<_> = records.iter().map(|r| r.receiver).collect();
    for kind in [
        ReceiverKind::Helstrom,
        ReceiverKind::Dd,
        ReceiverKind::Cpn,
        ReceiverKind::CpnOpt,
    ] {
        assert!(kinds.contains(&kind), "missing {kind:?}");
    }
    let dd = records
        .iter()
        .find(|r| r.receiver == ReceiverKind::Dd)
        .unwrap();
    let helstrom = records
        .iter()
        .find(|r| r.receiver == ReceiverKind::Helstrom)
        .unwrap();
    assert!(helstrom.p_error < dd.p_error);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(ppmrx(&["bounds", "--m", "4"]).status.code(), Some(2));
    assert_eq!(
        ppmrx(&["bounds", "--m", "4", "--n", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ppmrx(&["bounds", "--m", "0", "--n", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        ppmrx(&["--threads", "0", "bounds", "--m", "4", "--n", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(ppmrx(&["sweep", "--preset", "fig9"]).status.code(), Some(2));
}

#[test]
fn capacity_errors_exit_3() {
    assert_eq!(
        ppmrx(&["exact", "--m", "32", "--n", "1"]).status.code(),
        Some(3)
    );
    assert_eq!(
        ppmrx(&["optimal", "--m", "4", "--n", "1", "--brute"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn non_monotone_fit_input_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut text = format!("{}\n", header());
    for (i, n) in [0.001, 0.002, 0.005, 0.01, 0.02, 0.05].iter().enumerate() {
        let p = 0.7 + 0.01 * i as f64;
        text.push_str(&format!("dd,4,{n},0,0,,{p},0,0,,formula\n"));
    }
    fs::write(&path, text).unwrap();
    let out = ppmrx(&[
        "fit",
        "--input",
        path.to_str().unwrap(),
        "--mode",
        "photon-starved",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_is_identical_across_thread_counts() {
    let one = stdout(&ppmrx(&[
        "--threads",
        "1",
        "sweep",
        "--preset",
        "fig4a",
        "--seed",
        "7",
    ]));
    let four = stdout(&ppmrx(&[
        "--threads",
        "4",
        "sweep",
        "--preset",
        "fig4a",
        "--seed",
        "7",
    ]));
    assert_eq!(one, four);
    assert!(one.lines().count() > 1);
}

#[test]
fn empty_grid_writes_header_only() {
    let text = stdout(&ppmrx(&[
        "sweep",
        "--m",
        "4",
        "--n-points",
        "0",
        "--receivers",
        "dd",
    ]));
    assert_eq!(text.trim_end(), header());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "m = 8\nn = 1.0\nnb = 0.002\nformat = \"json\"\n").unwrap();
    let cfg = path.to_str().unwrap();
    let json = stdout(&ppmrx(&["--config", cfg, "bounds"]));
    assert!(json.lines().all(|l| l.starts_with('{')));
    assert!(json.contains("\"m\":8"));
    let csv = stdout(&ppmrx(&[
        "--config", cfg, "bounds", "--m", "2", "--format", "csv",
    ]));
    let records = read_csv(csv.as_bytes()).unwrap();
    assert!(records
        .iter()
        .all(|r| r.m == 2 && r.nb == 0.002 && r.n == 1.0));
    fs::write(&path, "m = 8\nunknown = 1\n").unwrap();
    assert_eq!(
        ppmrx(&["--config", cfg, "bounds", "--n", "1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn lut_build_and_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let table = path.to_str().unwrap();
    stdout(&ppmrx(&[
        "lut", "build", "--n", "1", "--nb", "0.002", "--points", "64", "--out", table,
    ]));
    let written = fs::read_to_string(&path).unwrap();
    assert_eq!(written.lines().filter(|l| !l.starts_with('#')).count(), 65);
    let answer = stdout(&ppmrx(&["lut", "query", "--lut", table, "--r", "0.5,1,2"]));
    assert_eq!(answer.lines().count(), 4);
    let out = ppmrx(&[
        "simulate", "--m", "4", "--n", "1", "--nb", "0.002", "--lut", table, "--trials", "2000",
    ]);
    let records = read_csv(stdout(&out).as_bytes()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].trials, 2000);
}

#[test]
fn simulate_is_seeded() {
    let args = [
        "simulate",
        "--m",
        "4",
        "--n",
        "1",
        "--receiver",
        "dd",
        "--trials",
        "5000",
        "--seed",
        "11",
    ];
    assert_eq!(stdout(&ppmrx(&args)), stdout(&ppmrx(&args)));
}

#[test]
fn fits_over_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let sweep = path.to_str().unwrap();
    stdout(&ppmrx(&[
        "sweep",
        "--m",
        "4",
        "--n-min",
        "1e-3",
        "--n-max",
        "0.1",
        "--n-points",
        "10",
        "--receivers",
        "helstrom,dd,greedy",
        "--backend",
        "exact",
        "--out",
        sweep,
    ]));
    let fit = stdout(&ppmrx(&[
        "fit",
        "--input",
        sweep,
        "--mode",
        "photon-starved",
    ]));
    let helstrom = fit
        .lines()
        .find(|l| l.starts_with("helstrom"))
        .expect("helstrom fit row");
    let header: Vec<&str> = fit.lines().next().unwrap().split(',').collect();
    let slope_col = header.iter().position(|h| *h == "slope").unwrap();
    let slope: f64 = helstrom.split(',').nth(slope_col).unwrap().parse().unwrap();
    assert!((slope - 0.5).abs() < 0.02, "slope {slope}");
    let gaps = stdout(&ppmrx(&["fit", "--input", sweep, "--mode", "db-gap"]));
    assert!(gaps.lines().count() > 1);
}
