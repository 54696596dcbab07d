//! Black-box tests of the `hullft` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hullft_core::io::{write_pool, SelectionFile};
use hullft_core::CandidatePool;
use serde_json::Value;
use tempfile::TempDir;

fn hullft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullft")).args(args).output().expect("spawn hullft")
}

fn ok(args: &[&str]) -> String {
    let out = hullft(args);
    assert!(out.status.success(), "hullft {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    hullft(args).status.code().expect("exit code")
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

/// Pool {a=(1,0), b=(0,1)} and query (0.5, 0.5).
fn midpoint(dir: &TempDir) -> (PathBuf, PathBuf) {
    let pool_path = dir.path().join("pool.hft");
    let query_path = dir.path().join("query.hft");
    let pool = CandidatePool::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], Some(vec!["a".into(), "b".into()])).unwrap();
    write_pool(&pool, &pool_path).unwrap();
    let query = CandidatePool::from_rows(&[vec![0.5, 0.5]], Some(vec!["mid".into()])).unwrap();
    write_pool(&query, &query_path).unwrap();
    (pool_path, query_path)
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn select_midpoint_counts() {
    let dir = TempDir::new().unwrap();
    let (pool, query) = midpoint(&dir);
    let text = ok(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "3"]);
    let file = SelectionFile::from_json(&text).unwrap();
    assert_eq!(file.query_id, "mid");
    assert_eq!(file.counted_entries().unwrap(), vec![("a".to_string(), 2), ("b".to_string(), 1)]);
    let err = file.metrics.integer_error.unwrap();
    assert!((err - 1.0 / 18.0).abs() < 1e-15, "{err}");
}

#[test]
fn select_budget_one() {
    let dir = TempDir::new().unwrap();
    let (pool, query) = midpoint(&dir);
    let text = ok(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "1"]);
    let file = SelectionFile::from_json(&text).unwrap();
    let counted: Vec<_> = file.counted_entries().unwrap().into_iter().filter(|e| e.1 > 0).collect();
    assert_eq!(counted, vec![("a".to_string(), 1)]);
}

#[test]
fn select_without_integerizer_warns() {
    let dir = TempDir::new().unwrap();
    let (pool, query) = midpoint(&dir);
    let out = hullft(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "3", "--integerizer", "none"]);
    assert!(out.status.success());
    let v = json(&String::from_utf8(out.stdout).unwrap());
    assert!(v["warning"].is_string());
    assert!(v["support"].as_array().unwrap().iter().all(|e| e.get("count").is_none()));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn select_from_corpus_reports_corpus_indices() {
    let dir = TempDir::new().unwrap();
    let corpus_path = dir.path().join("corpus.hft");
    let rows = vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]];
    write_pool(&CandidatePool::from_rows(&rows, None).unwrap(), &corpus_path).unwrap();
    let (_, query) = midpoint(&dir);
    let text = ok(&["select", "--corpus", &s(&corpus_path), "--query", &s(&query), "--k-pool", "2", "--budget", "2"]);
    let file = SelectionFile::from_json(&text).unwrap();
    let mut indices: Vec<usize> = file.support.iter().map(|e| e.pool_index).collect();
    indices.sort();
    assert_eq!(indices, vec![1, 3]);
}

#[test]
fn schedule_from_selection_and_sequences() {
    let dir = TempDir::new().unwrap();
    let (pool, query) = midpoint(&dir);
    let sel = dir.path().join("sel.json");
    ok(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "8", "--out", &s(&sel)]);
    let v = json(&ok(&["schedule", "--selection", &s(&sel), "--refresh", "2"]));
    assert_eq!(v["stats"]["fb_passes"], 4);
    assert_eq!(v["stats"]["total_steps"], 8);

    let seq = write(&dir, "seq.txt", "a\nb\na\nc\nb\n");
    let v = json(&ok(&["schedule", "--sequence", &s(&seq), "--transform", "global-dedup", "--refresh", "2"]));
    let ids: Vec<&str> = v["steps"].as_array().unwrap().iter().map(|x| x["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["a", "a", "b", "b", "c"]);
    assert_eq!(v["stats"]["fb_passes"], 3);

    let v = json(&ok(&["schedule", "--sequence", &s(&seq), "--refresh", "1"]));
    assert_eq!(v["stats"]["fb_passes"], v["stats"]["total_steps"]);
    assert_eq!(v["stats"]["fb_passes"], 5);
}

#[test]
fn schedule_counts_four_three_one() {
    let dir = TempDir::new().unwrap();
    let seq = write(&dir, "seq.txt", "x\nx\nx\nx\ny\ny\ny\nz\n");
    let v = json(&ok(&["schedule", "--sequence", &s(&seq), "--transform", "consecutive"]));
    assert_eq!(v["refresh_interval"], 2);
    assert_eq!(v["stats"]["fb_passes"], 5);
}

#[test]
fn toytrain_reuse_and_plain() {
    let dir = TempDir::new().unwrap();
    let seq = write(&dir, "seq.txt", "a\na\na\na\nb\nb\n");
    let targets = write(&dir, "targets.json", r#"{"a": [1.0, -2.0, 0.5], "b": [0.0, 0.3, -1.0]}"#);

    let r1 = dir.path().join("r1.json");
    ok(&["schedule", "--sequence", &s(&seq), "--refresh", "1", "--out", &s(&r1)]);
    let reuse = json(&ok(&["toytrain", "--schedule", &s(&r1), "--targets", &s(&targets), "--seed", "5"]));
    let plain = json(&ok(&["toytrain", "--schedule", &s(&r1), "--targets", &s(&targets), "--seed", "5", "--plain"]));
    assert_eq!(reuse["loss_trace"], plain["loss_trace"]);
    assert_eq!(reuse["params"], plain["params"]);

    let single = write(&dir, "single.txt", "a\na\na\na\n");
    let r2 = dir.path().join("r2.json");
    ok(&["schedule", "--sequence", &s(&single), "--refresh", "2", "--out", &s(&r2)]);
    let v = json(&ok(&["toytrain", "--schedule", &s(&r2), "--targets", &s(&targets)]));
    assert_eq!(v["fb_passes"], 2);
    assert_eq!(v["schedule_fb_passes"], 2);
}

#[test]
fn toytrain_empty_schedule() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.txt", "");
    let sched = dir.path().join("sched.json");
    ok(&["schedule", "--sequence", &s(&empty), "--out", &s(&sched)]);
    let targets = write(&dir, "targets.json", r#"{"a": [1.0, 2.0]}"#);
    let v = json(&ok(&["toytrain", "--schedule", &s(&sched), "--targets", &s(&targets)]));
    assert_eq!(v["steps"], 0);
    assert_eq!(v["fb_passes"], 0);
    assert_eq!(v["loss_trace"].as_array().unwrap().len(), 1);
    assert_eq!(v["initial_loss"], v["final_loss"]);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let (pool, query) = midpoint(&dir);
    // usage
    assert_eq!(code(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "0"]), 2);
    assert_eq!(code(&["select", "--query", &s(&query), "--budget", "3"]), 2);
    let seq = write(&dir, "seq.txt", "a\n");
    assert_eq!(code(&["schedule", "--sequence", &s(&seq), "--refresh", "0"]), 2);

    // format and io
    let junk = write(&dir, "junk.hft", "not a pool");
    assert_eq!(code(&["select", "--pool", &s(&junk), "--query", &s(&query), "--budget", "3"]), 3);
    let missing = dir.path().join("missing.hft");
    assert_eq!(code(&["select", "--pool", &s(&missing), "--query", &s(&query), "--budget", "3"]), 3);
    let bad_sched = write(&dir, "bad.json", r#"{"refresh_interval": 2, "steps": [], "stats": {}}"#);
    let targets = write(&dir, "targets.json", r#"{"a": [1.0]}"#);
    assert_eq!(code(&["toytrain", "--schedule", &s(&bad_sched), "--targets", &s(&targets)]), 3);

    // scheduled id without a target
    let other = write(&dir, "other.txt", "zz\n");
    let sched = dir.path().join("sched.json");
    ok(&["schedule", "--sequence", &s(&other), "--out", &s(&sched)]);
    assert_eq!(code(&["toytrain", "--schedule", &s(&sched), "--targets", &s(&targets)]), 3);
}

#[test]
fn tampered_schedule_rejected() {
    let dir = TempDir::new().unwrap();
    let seq = write(&dir, "seq.txt", "a\na\na\n");
    let mut v = json(&ok(&["schedule", "--sequence", &s(&seq)]));
    v["stats"]["fb_passes"] = 1.into();
    let path = write(&dir, "sched.json", &v.to_string());
    let targets = write(&dir, "targets.json", r#"{"a": [1.0]}"#);
    assert_eq!(code(&["toytrain", "--schedule", &s(&path), "--targets", &s(&targets)]), 3);
}

#[test]
fn bench_rows_and_determinism() {
    let args = ["bench", "--k", "30", "--dim", "12", "--seed", "4", "--n-min", "1", "--n-max", "5"];
    let first = ok(&args);
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 5);
    assert!(lines[0].starts_with("selector,integerizer,budget"));

    // objective columns only; the last two columns are wall times
    let objective = |text: &str| -> Vec<String> {
        text.lines().skip(1).map(|l| l.rsplitn(3, ',').nth(2).unwrap().to_string()).collect()
    };
    assert_eq!(objective(&first), objective(&ok(&args)));
}

#[test]
fn synth_round_trip() {
    let dir = TempDir::new().unwrap();
    let pool = dir.path().join("p.hft");
    let query = dir.path().join("q.hft");
    ok(&["synth", "--k", "6", "--dim", "4", "--out", &s(&pool), "--query-out", &s(&query)]);
    let text = ok(&["select", "--pool", &s(&pool), "--query", &s(&query), "--budget", "4"]);
    let file = SelectionFile::from_json(&text).unwrap();
    assert_eq!(file.counted_entries().unwrap().iter().map(|e| e.1).sum::<usize>(), 4);
}
