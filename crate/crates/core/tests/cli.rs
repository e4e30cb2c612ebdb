use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-qubit"))
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

/// Header and parsed numeric rows.
fn parse(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn single_exact_row() {
    let o = run(&[
        "evolve",
        "--method",
        "exact",
        "--steps",
        "1",
        "--t-start",
        "0",
        "--dim",
        "16",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = parse(&stdout(&o));
    assert_eq!(header, ["t", "inversion", "mean_photon"]);
    assert_eq!(rows.len(), 1);
    assert!(rows[0][1].abs() < 1e-14);
}

#[test]
fn csv_layout() {
    let o = run(&["qubit", "--steps", "3", "--t-end", "4", "--dim", "16"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let (header, rows) = parse(&text);
    assert_eq!(
        header,
        [
            "t",
            "c0sq",
            "c1sq",
            "relative_phase",
            "leak",
            "fidelity_to_exact",
            "measure_probability"
        ]
    );
    let second = text.lines().nth(1).unwrap();
    let mantissa = second.split(',').nth(1).unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 15);
    assert!((rows[0][1] - 1.0).abs() < 1e-12 && rows[0][2] < 1e-12);
}

#[test]
fn zero_coupling_keeps_inversion() {
    let o = run(&[
        "evolve", "--lambda", "0", "--dim", "16", "--steps", "6", "--t-end", "50",
    ]);
    assert!(o.status.success());
    let (header, rows) = parse(&stdout(&o));
    let inv = column(&header, &rows, "inversion");
    assert!(inv.iter().all(|x| (x - inv[0]).abs() < 1e-14));
}

#[test]
fn small_rotation_fidelity_dominates_rwa_on_resonance() {
    let args = |method| {
        vec![
            "evolve",
            "--omega0",
            "1",
            "--method",
            method,
            "--dim",
            "32",
            "--t-start",
            "10",
            "--t-end",
            "100",
            "--steps",
            "19",
        ]
    };
    let sr = run(&args("small-rotation"));
    let rwa = run(&args("rwa"));
    let (h, sr_rows) = parse(&stdout(&sr));
    let (_, rwa_rows) = parse(&stdout(&rwa));
    let f_sr = column(&h, &sr_rows, "fidelity_to_exact");
    let f_rwa = column(&h, &rwa_rows, "fidelity_to_exact");
    assert!(f_sr.iter().zip(&f_rwa).all(|(a, b)| a > b));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"lambda": 0.05, "dim": 16, "steps": 4, "t_end": 3.0, "method": "exact"}"#,
    )
    .unwrap();
    let out = dir.path().join("e.csv");
    let o = run(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--steps",
        "2",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let (header, rows) = parse(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header.len(), 3);
    assert_eq!(column(&header, &rows, "t"), vec![0.0, 3.0]);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("e.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["params"]["lambda"], 0.05);
    assert_eq!(meta["dim"], 16);
    assert_eq!(meta["displacement_sign"], -1.0);
    assert_eq!(meta["derived"]["delta"], 0.02);
    assert!(meta["version"].is_string());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    let unknown_key = dir.path().join("unknown.json");
    std::fs::write(&unknown_key, r#"{"lamda": 0.1}"#).unwrap();

    for args in [
        vec!["evolve", "--dim", "7"],
        vec!["evolve", "--omega", "-1"],
        vec!["evolve", "--t-start", "5", "--t-end", "1"],
        vec!["evolve", "--steps", "0"],
        vec!["evolve", "--method", "magic"],
        vec!["frobnicate"],
        vec!["evolve", "--config", bad_json.to_str().unwrap()],
        vec!["evolve", "--config", unknown_key.to_str().unwrap()],
        vec!["evolve", "--config", "/nonexistent/config.json"],
        vec!["sweep", "--sweep", "lambda=0.1:0.2:1"],
        vec!["sweep"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn guard_failures_exit_two_with_every_point() {
    let o = run(&[
        "wigner",
        "--dim",
        "8",
        "--re-min",
        "-2",
        "--re-max",
        "2",
        "--im-min",
        "0",
        "--im-max",
        "0",
        "--resolution",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    // |alpha|^2 > 1 at re = -2, -1.5, 1.5, 2
    assert_eq!(
        stderr(&o)
            .lines()
            .filter(|l| l.contains("grid point"))
            .count(),
        4
    );
}

#[test]
fn impossible_measurement_exits_two() {
    // on resonance the |+> outcome vanishes at t = pi / lambda
    let t = format!("{}", std::f64::consts::PI / 0.1);
    let o = run(&[
        "qubit",
        "--omega0",
        "1",
        "--dim",
        "16",
        "--steps",
        "1",
        "--t-start",
        &t,
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn wigner_origin_of_vacuum() {
    let o = run(&[
        "wigner", "--lambda", "0", "--re-min", "0", "--re-max", "0", "--im-min", "0", "--im-max",
        "0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = parse(&stdout(&o));
    assert_eq!(header, ["re", "im", "W"]);
    assert_eq!(rows.len(), 1);
    assert!((rows[0][2] - std::f64::consts::FRAC_2_PI).abs() < 1e-14);
}

#[test]
fn default_wigner_grid_runs() {
    let o = run(&["wigner"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = parse(&stdout(&o));
    assert_eq!(rows.len(), 121 * 121);
    assert_eq!(rows[0][..2], [-3.0, -3.0]);
    assert_eq!(rows[1][..2], [-3.0, -2.95]);
}

#[test]
fn sweep_rows_and_order() {
    let base = ["--dim", "16", "--steps", "3", "--t-end", "2"];
    let plain = run(&[&["evolve"][..], &base].concat());
    let swept = run(&[&["sweep", "--sweep", "lambda=0.05:0.1:2"][..], &base].concat());
    assert!(swept.status.success(), "{}", stderr(&swept));
    let (ph, prows) = parse(&stdout(&plain));
    let (sh, srows) = parse(&stdout(&swept));
    assert_eq!(sh[0], "sweep_lambda");
    assert_eq!(&sh[1..], &ph[..]);
    assert_eq!(srows.len(), 2 * prows.len());
    assert_eq!(
        column(&sh, &srows, "sweep_lambda"),
        vec![0.05, 0.05, 0.05, 0.1, 0.1, 0.1]
    );
    let tail: Vec<Vec<f64>> = srows[3..].iter().map(|r| r[1..].to_vec()).collect();
    assert_eq!(tail, prows);
}

#[test]
fn large_rotation_warns() {
    let o = run(&["evolve", "--lambda", "0.6", "--dim", "16", "--steps", "1"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
    let quiet = run(&["evolve", "--dim", "16", "--steps", "1"]);
    assert!(stderr(&quiet).is_empty());
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let file = |name: &str| dir.path().join(name);
    let go = |out: &Path| {
        let o = run(&[
            "sweep",
            "--base",
            "qubit",
            "--sweep",
            "omega0=1:1.5:3",
            "--sweep",
            "t=0.5:20:4",
            "--dim",
            "24",
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    go(&file("a.csv"));
    go(&file("b.csv"));
    assert_eq!(
        std::fs::read(file("a.csv")).unwrap(),
        std::fs::read(file("b.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(file("a.csv.meta.json")).unwrap(),
        std::fs::read(file("b.csv.meta.json")).unwrap()
    );
}
