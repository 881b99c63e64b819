use std::process::Command as Process;

use clap::Parser;
use fairshare_cli::commands::{read_sweep_csv, SimulationSummary, Solution};
use fairshare_cli::{run, Cli};

fn invoke(args: &[&str]) -> (fairshare_cli::Result<()>, String) {
    let cli = Cli::try_parse_from(std::iter::once("fairshare").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    let res = run(&cli, &mut out);
    (res, String::from_utf8(out).unwrap())
}

fn solve(args: &[&str]) -> Solution {
    let mut full = vec!["solve"];
    full.extend_from_slice(args);
    let (res, out) = invoke(&full);
    res.unwrap();
    serde_json::from_str(&out).unwrap()
}

const TEN_MEANS: &str = "7,6.7,5.5,4.5,1.263157894736842,1.2105263157894737,1.1578947368421053,1.1052631578947367,1.0526315789473684,1.0";

#[test]
fn solve_examples() {
    let sol = solve(&["--means", TEN_MEANS, "--players", "3"]);
    let expected = [0.20520991244624573, 0.21439841598861492, 0.26117625220431273, 0.31921541936082665];
    for (p, e) in sol.strategy.iter().zip(expected) {
        assert!((p - e).abs() <= 1e-6);
    }
    assert!(sol.strategy[4..].iter().all(|&p| p == 0.0));
    assert_eq!(sol.error_bound, 0.0);

    let sol = solve(&["--means", "1,1"]);
    assert!((sol.value - 0.75).abs() <= 1e-12);

    let sol = solve(&["--means", "1,1,1,1", "--picks", "2"]);
    assert_eq!(sol.case_tag.as_deref(), Some("fallback"));
    assert!((sol.value - 1.5).abs() <= 1e-2);

    let sol = solve(&["--resources", "3", "--players", "4", "--picks", "2"]);
    assert_eq!(sol.method, "gradient");
    assert!(sol.error_bound > 0.0);

    let sol = solve(&["--means", "2,1,1", "--players", "3", "--method", "grid", "--resolution", "0.01"]);
    assert_eq!(sol.method, "grid");
    let exact = solve(&["--means", "2,1,1", "--players", "3"]);
    assert!((sol.value - exact.value).abs() <= sol.error_bound);
}

fn sweep_rows(args: &[&str]) -> Vec<fairshare_cli::commands::SweepRow> {
    let mut full = vec!["sweep"];
    full.extend_from_slice(args);
    let (res, out) = invoke(&full);
    res.unwrap();
    read_sweep_csv(out.as_bytes()).unwrap()
}

#[test]
fn sweep_examples() {
    let rows = sweep_rows(&["--resources", "4", "--players", "2", "--e1", "3:3:1"]);
    assert_eq!(rows[0].strategy[0], 1.0);
    let rows = sweep_rows(&["--resources", "4", "--players", "3", "--e1", "3.3:3.3:1"]);
    assert!((rows[0].strategy[0] - 1.0).abs() <= 1e-12);
    let rows = sweep_rows(&["--resources", "4", "--players", "2", "--e1", "0.01:0.05:0.02"]);
    assert!(rows.iter().all(|r| r.strategy[0] == 0.0));
    assert_eq!(rows.len(), 3);
}

#[test]
fn sweep_rows_are_feasible_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (res, _) = invoke(&["sweep", "--resources", "5", "--players", "2", "--picks", "2", "--e1", "0.2:6:0.2", "--out", out, "--jobs", "3"]);
    res.unwrap();
    let rows = read_sweep_csv(std::fs::File::open(dir.path().join("sweep.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 30);
    for (i, row) in rows.iter().enumerate() {
        assert!((row.e1 - (0.2 + 0.2 * i as f64)).abs() <= 1e-12);
        assert!(row.value_upper >= row.value);
        assert!((row.strategy.iter().sum::<f64>() - 2.0).abs() <= 1e-6);
        assert!(row.strategy.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

#[test]
fn simulate_summary_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &str| {
        vec![
            "simulate".to_string(),
            "--means".into(),
            "1.5,1".into(),
            "--cap".into(),
            "2".into(),
            "--horizon".into(),
            "1000".into(),
            "--seeds".into(),
            "10".into(),
            "--out".into(),
            dir.into(),
        ]
    };
    let run_in = |dir: &tempfile::TempDir| {
        let argv = args(dir.path().to_str().unwrap());
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        let (res, out) = invoke(&argv);
        res.unwrap();
        serde_json::from_str::<SimulationSummary>(&out).unwrap()
    };
    let summary = run_in(&a);
    run_in(&b);
    let bound = summary.bound.unwrap();
    assert!((bound - 3052.8).abs() < 0.5, "{bound}");
    assert_eq!(summary.bound_satisfied, Some(true));
    assert!(summary.final_regret.iter().all(|&r| r <= bound));
    assert_eq!(summary.final_regret.len(), 10);

    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 21);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    std::fs::write(&path, r#"{"means": [4, 1], "players": 3, "method": "closed-form"}"#).unwrap();
    let p = path.to_str().unwrap();
    let from_file = solve(&["--config", p]);
    assert_eq!(from_file.players, 3);
    let overridden = solve(&["--config", p, "--players", "2"]);
    assert_eq!(overridden.players, 2);
    assert!((overridden.value - 2.0).abs() <= 1e-12);
}

#[test]
fn means_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("means.txt");
    std::fs::write(&path, "4\n1\n").unwrap();
    let sol = solve(&["--means", path.to_str().unwrap()]);
    assert_eq!(sol.means, vec![4.0, 1.0]);
}

#[test]
fn exit_codes() {
    let bin = env!("CARGO_BIN_EXE_fairshare");
    let status = |args: &[&str]| Process::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["solve", "--means", "1,2"]), Some(0));
    assert_eq!(status(&["solve", "--means", "1,2", "--picks", "2"]), Some(2));
    assert_eq!(status(&["solve", "--means", "1,2", "--players", "4", "--method", "closed-form"]), Some(2));
    assert_eq!(status(&["solve", "--bogus"]), Some(2));
    assert_eq!(status(&["sweep", "--resources", "3", "--e1", "1:2:0"]), Some(2));
    assert_eq!(status(&["solve", "--means", "1,-1"]), Some(2));
}
