use std::fs;
use std::process::{Command, Output};

use rgg_distcolor::experiments::read_trial_csv;
use rgg_distcolor::graph::read_edgelist;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgg-distcolor"))
        .args(args)
        .env_remove("RGG_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn two_adjacent_points_edge_list() {
    let out = bin(&["generate", "--n", "2", "--radius", "2", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "2 1\n0 1\n");
}

#[test]
fn generate_round_trips_through_reader() {
    let out = bin(&["generate", "--n", "300", "--regime", "conn:2", "--seed", "1", "--format", "edgelist"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let g = read_edgelist(text.as_bytes()).unwrap();
    assert_eq!(g.n(), 300);
    let mut again = Vec::new();
    rgg_distcolor::graph::write_edgelist(&g, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), text);
}

#[test]
fn color_from_file_is_proper() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "5 5\n0 1\n0 4\n1 2\n2 3\n3 4\n").unwrap();
    let out = bin(&["color", "--input", graph.to_str().unwrap(), "--l", "1", "--method", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    let colors: Vec<u32> = stdout(&out)
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let (idx, c) = line.split_once(' ').unwrap();
            assert_eq!(idx.parse::<usize>().unwrap(), i);
            c.parse().unwrap()
        })
        .collect();
    assert_eq!(colors.len(), 5);
    assert_eq!(*colors.iter().max().unwrap(), 2);
    for (a, b) in [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)] {
        assert_ne!(colors[a], colors[b]);
    }
    // C5 squared is K5.
    let out = bin(&["color", "--input", graph.to_str().unwrap(), "--l", "2", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["upper"], 5);
    assert_eq!(doc["exact"], true);
}

#[test]
fn theory_table() {
    let out = bin(&["theory", "--points", "5", "--tmin", "0.01", "--tmax", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,xi,c_ratio");
    assert_eq!(lines.len(), 6);
    assert!(text.ends_with('\n'));
}

#[test]
fn experiment_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let out = Command::new(env!("CARGO_BIN_EXE_rgg-distcolor"))
            .args(["experiment", "--regime", "conn:2", "--grid", "200,400", "--trials", "3", "--seed", "7"])
            .arg("--out")
            .arg(path)
            .env("RGG_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ca, cb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    assert_eq!(read_trial_csv(ca.as_slice()).unwrap().len(), 6);
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.csv.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["per_n"].as_array().unwrap().len(), 2);
    assert_eq!(summary["manifest"]["seeds"].as_array().unwrap().len(), 6);
}

#[test]
fn usage_errors_exit_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("never.csv");
    let out_str = out_path.to_str().unwrap();
    for args in [
        vec!["experiment", "--grid", "", "--out", out_str],
        vec!["experiment", "--trials", "2", "--out", out_str],
        vec!["experiment", "--regime", "sub:0.5", "--grid", "2", "--out", out_str],
        vec!["generate", "--n", "10", "--p", "0.5", "--out", out_str],
        vec!["generate", "--n", "10", "--frobnicate"],
        vec!["color"],
    ] {
        let out = bin(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
        assert!(!out_path.exists(), "{args:?} created a file");
    }
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    let out = bin(&["color", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let unwritable = dir.path().join("no_such_dir").join("x.txt");
    let out = bin(&["generate", "--n", "20", "--out", unwritable.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_succeeds() {
    let out = bin(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("experiment"));
}
