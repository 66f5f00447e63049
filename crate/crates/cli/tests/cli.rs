use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthminer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn score(o: &Output) -> (f64, f64) {
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("score JSON");
    (
        v["fitness"].as_f64().unwrap(),
        v["precision"].as_f64().unwrap(),
    )
}

#[test]
fn discover_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let pnml = dir.path().join("out.pnml");
    let dot = dir.path().join("out.dot");
    let report = dir.path().join("report.json");
    let csv = dir.path().join("iterations.csv");
    let log = fixture("Ls.csv");
    let o = run(&[
        "discover",
        "--log",
        log.to_str().unwrap(),
        "--time-col",
        "time",
        "--ordering",
        "bfs-start",
        "--export-pnml",
        pnml.to_str().unwrap(),
        "--export-dot",
        dot.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&pnml).unwrap().contains("<pnml>"));
    assert!(fs::read_to_string(&dot)
        .unwrap()
        .starts_with("digraph wfnet {"));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["schema"], 1);
    assert_eq!(r["strategy"], "bfs-start");
    assert_eq!(r["iterations"].as_array().unwrap().len(), 6);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 7);

    // the written net scores perfectly on its own log
    let e = run(&[
        "evaluate",
        "--net",
        pnml.to_str().unwrap(),
        "--log",
        fixture("Ls.json").to_str().unwrap(),
    ]);
    assert!(e.status.success());
    assert_eq!(score(&e).0, 1.0);
}

#[test]
fn discover_is_byte_deterministic() {
    let log = fixture("Ls.json");
    let a = run(&["discover", "--log", log.to_str().unwrap()]);
    let b = run(&["discover", "--log", log.to_str().unwrap(), "--jobs", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn invalid_ordering_is_a_usage_error() {
    let o = run(&[
        "discover",
        "--log",
        fixture("Ls.json").to_str().unwrap(),
        "--ordering",
        "alphabetical",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("freq, bfs-start, bfs-end, dfs-start, dfs-end"),
        "{err}"
    );
}

#[test]
fn bad_numeric_flags_are_usage_errors() {
    let log = fixture("Ls.json");
    for flag in [
        ["--threshold", "1.5"],
        ["--coverage", "x"],
        ["--jobs", "0"],
        ["--patterns", "choice"],
    ] {
        let o = run(&["discover", "--log", log.to_str().unwrap(), flag[0], flag[1]]);
        assert_eq!(o.status.code(), Some(2), "{flag:?}");
    }
}

#[test]
fn unreadable_log_is_an_io_error() {
    let o = run(&["discover", "--log", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["order", "--log", "/definitely/not/here.xes"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_log_extension_is_a_usage_error() {
    let o = run(&["order", "--log", fixture("W3.pnml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn order_prints_all_five_strategies() {
    let o = run(&[
        "order",
        "--log",
        fixture("Ls.csv").to_str().unwrap(),
        "--time-col",
        "time",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let get = |k: &str| -> String {
        v[k].as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_str().unwrap())
            .collect()
    };
    assert_eq!(get("freq"), "bcdefg");
    assert_eq!(get("bfs-start"), "becfdg");
    assert_eq!(get("bfs-end"), "gdfceb");
    assert_eq!(get("dfs-start"), "bcfgde");
    assert_eq!(get("dfs-end"), "gfcbed");
}

#[test]
fn order_single_strategy() {
    let o = run(&[
        "order",
        "--log",
        fixture("Ls.json").to_str().unwrap(),
        "--ordering",
        "dfs-end",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), r#"["g","f","c","b","e","d"]"#);
}

#[test]
fn order_edge_cases() {
    let o = run(&["order", "--log", fixture("empty.json").to_str().unwrap()]);
    assert!(!o.status.success());
    let o = run(&["order", "--log", fixture("single.json").to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for (_, order) in v.as_object().unwrap() {
        assert_eq!(order, &serde_json::json!(["a"]));
    }
}

#[test]
fn evaluate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let seq_net = dir.path().join("seq.pnml");
    let d = run(&[
        "discover",
        "--log",
        fixture("seq.json").to_str().unwrap(),
        "--export-pnml",
        seq_net.to_str().unwrap(),
    ]);
    assert!(d.status.success());
    let e = run(&[
        "evaluate",
        "--net",
        seq_net.to_str().unwrap(),
        "--log",
        fixture("seq.json").to_str().unwrap(),
    ]);
    assert_eq!(score(&e), (1.0, 1.0));

    let e = run(&[
        "evaluate",
        "--net",
        fixture("W3.pnml").to_str().unwrap(),
        "--log",
        fixture("L3.json").to_str().unwrap(),
    ]);
    assert!(e.status.success());
    assert_eq!(score(&e).0, 1.0);

    let e = run(&[
        "evaluate",
        "--net",
        "/missing.pnml",
        "--log",
        fixture("L3.json").to_str().unwrap(),
    ]);
    assert_eq!(e.status.code(), Some(1));
}

#[test]
fn convert_round_trip_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("w3.dot");
    let back = dir.path().join("w3.pnml");
    assert!(run(&[
        "convert",
        "--input",
        fixture("W3.pnml").to_str().unwrap(),
        "--output",
        dot.to_str().unwrap()
    ])
    .status
    .success());
    assert!(run(&[
        "convert",
        "--input",
        dot.to_str().unwrap(),
        "--output",
        back.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(
        fs::read_to_string(back).unwrap(),
        fs::read_to_string(fixture("W3.pnml")).unwrap()
    );
}

#[test]
fn convert_initial_net_matches_golden_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("initial.dot");
    let o = run(&[
        "convert",
        "--input",
        fixture("initial_net.pnml").to_str().unwrap(),
        "--output",
        dot.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read_to_string(dot).unwrap(),
        fs::read_to_string(fixture("initial_net.dot")).unwrap()
    );
}

#[test]
fn convert_rejects_bad_xml() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pnml");
    fs::write(&bad, "<pnml><net><place id=\"i\"></net>").unwrap();
    let o = run(&[
        "convert",
        "--input",
        bad.to_str().unwrap(),
        "--output",
        dir.path().join("x.dot").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_lists_flags_with_defaults() {
    let o = run(&["discover", "--help"]);
    let help = stdout(&o);
    for flag in [
        "--log",
        "--case-col",
        "--activity-col",
        "--time-col",
        "--ordering",
        "--threshold",
        "--coverage",
        "--max-subset-size",
        "--patterns",
        "--path-budget",
        "--lookahead",
        "--soundness-budget",
        "--jobs",
        "--export-pnml",
        "--export-dot",
        "--report",
        "--csv",
    ] {
        assert!(help.contains(flag), "{flag} missing");
    }
    for default in [
        "[default: freq]",
        "[default: 0.9]",
        "[default: 0.95]",
        "[default: 3]",
        "[default: 50000]",
        "[default: 100000]",
    ] {
        assert!(help.contains(default), "{default} missing");
    }
}
