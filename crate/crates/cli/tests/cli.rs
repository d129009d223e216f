use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use calmfeed_core::corpus::synthetic::{synthetic_rows, write_csv};
use serde_json::Value;

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new(rows_per_class: usize) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        write_csv(&synthetic_rows(rows_per_class, 3), fs::File::create(root.join("corpus.csv")).unwrap()).unwrap();
        Self { _tmp: tmp, root }
    }

    fn out(&self) -> PathBuf {
        self.root.join("out")
    }

    fn run(&self, args: &[&str]) -> Output {
        let corpus = self.root.join("corpus.csv");
        let out = self.out();
        let mut full = vec!["--corpus", corpus.to_str().unwrap(), "--out-dir", out.to_str().unwrap()];
        full.extend_from_slice(args);
        Command::new(env!("CARGO_BIN_EXE_calmfeed"))
            .args(&full)
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }

    fn config(&self, body: &str) -> String {
        let p = self.root.join("run.toml");
        fs::write(&p, body).unwrap();
        p.to_str().unwrap().to_string()
    }
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Answers every POST with `reply` and counts requests.
fn serve_forever(reply: &'static str) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    (url, hits)
}

#[test]
fn analyze_eight_texts_deterministically() {
    let ws = Workspace::new(4);
    let o = ws.run(&["analyze", "--mock-backends", "--per-class", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = ws.out().join("analyzed.jsonl");
    let first = fs::read(&path).unwrap();
    let records = lines(&path);
    assert_eq!(records.len(), 8);
    for r in &records {
        for key in ["id", "category", "text", "distribution", "stimulus", "ebi", "fre"] {
            assert!(!r[key].is_null(), "{key} missing in {r}");
        }
    }
    fs::remove_file(&path).unwrap();
    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "2"]).status.success());
    assert_eq!(fs::read(&path).unwrap(), first);
}

#[test]
fn unreachable_classifier_exits_nonzero() {
    let ws = Workspace::new(2);
    let cfg = ws.config(
        "[backends.classifier]\nendpoint = \"http://127.0.0.1:9/classify\"\ntimeout_secs = 1.0\nmax_retries = 1\n",
    );
    let o = ws.run(&["analyze", "--config", &cfg, "--per-class", "1"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("127.0.0.1:9") && err.contains("2 attempt"), "{err}");
}

#[test]
fn bad_flag_values_are_rejected() {
    let ws = Workspace::new(2);
    let o = ws.run(&["analyze", "--mock-backends", "--theta", "1.5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("theta"));
}

#[test]
fn detox_resume_skips_finished_texts() {
    let ws = Workspace::new(6);
    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "5"]).status.success());
    assert!(ws.run(&["detox", "--mock-backends"]).status.success());
    let rewrites = ws.out().join("rewrites.jsonl");
    let complete = fs::read_to_string(&rewrites).unwrap();
    assert_eq!(complete.lines().count(), 20);

    // Interrupted run: some finished lines plus a torn one.
    let kept: Vec<&str> = complete.lines().take(12).collect();
    fs::write(&rewrites, format!("{}\n{{\"text_id\": 9", kept.join("\n"))).unwrap();
    assert!(ws.run(&["detox", "--mock-backends"]).status.success());
    assert_eq!(fs::read_to_string(&rewrites).unwrap(), complete);

    // Nothing left to do, so an unreachable chat backend is never contacted.
    let cfg = ws.config("[backends.chat]\nendpoint = \"http://127.0.0.1:9/chat\"\nmax_retries = 0\n");
    let o = ws.run(&["detox", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn flagged_rewrites_set_exit_code() {
    let ws = Workspace::new(2);
    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "1"]).status.success());
    let (url, hits) = serve_forever(r#"{"text": "Too short."}"#);
    let cfg = ws.config(&format!("[backends.chat]\nendpoint = \"{url}\"\n"));
    let o = ws.run(&["detox", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(hits.load(Ordering::SeqCst), 4 * 2 * 3);
    for r in lines(&ws.out().join("rewrites.jsonl")) {
        assert_eq!(r["balanced"]["status"], "accepted_after_retries");
        assert_eq!(r["cool"]["attempts"], 3);
    }
    let o = ws.run(&["detox", "--config", &cfg, "--allow-flagged"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(hits.load(Ordering::SeqCst), 24);
}

#[test]
fn min_stimulus_gate_limits_rewrites() {
    let ws = Workspace::new(6);
    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "5"]).status.success());
    let analyzed = lines(&ws.out().join("analyzed.jsonl"));
    let eligible = analyzed.iter().filter(|r| r["stimulus"].as_f64().unwrap() >= 0.5).count();
    assert!(ws.run(&["detox", "--mock-backends", "--min-stimulus", "0.5"]).status.success());
    assert_eq!(lines(&ws.out().join("rewrites.jsonl")).len(), eligible);
    assert!(ws.run(&["verify", "--mock-backends"]).status.success());
    let cfg = ws.config("texts_per_consumer = 10\n");
    let o = ws.run(&["evaluate", "--config", &cfg, "--mock-backends", "--min-stimulus", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(ws.out().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n_texts"], eligible);
}

#[test]
fn stages_name_missing_inputs() {
    let ws = Workspace::new(2);
    let o = ws.run(&["detox", "--mock-backends"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("analyzed.jsonl"), "{}", stderr(&o));

    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "1"]).status.success());
    let o = ws.run(&["evaluate", "--mock-backends"]);
    assert!(stderr(&o).contains("rewrites_analyzed.jsonl"), "{}", stderr(&o));

    fs::write(ws.out().join("rewrites.jsonl"), "").unwrap();
    let o = ws.run(&["verify", "--mock-backends"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no rewrites"), "{}", stderr(&o));
}

#[test]
fn verify_summary_matches_records() {
    let ws = Workspace::new(6);
    for stage in ["analyze", "detox", "verify"] {
        assert!(ws.run(&[stage, "--mock-backends", "--per-class", "5"]).status.success());
    }
    let records = lines(&ws.out().join("fidelity.jsonl"));
    assert_eq!(records.len(), 40);
    let summaries: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(ws.out().join("fidelity_summary.json")).unwrap()).unwrap();
    for s in &summaries {
        let mode = s["mode"].as_str().unwrap();
        let mine: Vec<&Value> = records.iter().filter(|r| r["mode"] == mode).collect();
        let mean = mine.iter().map(|r| r["cosine"].as_f64().unwrap()).sum::<f64>() / mine.len() as f64;
        assert!((s["mean_cosine"].as_f64().unwrap() - mean).abs() < 1e-12);
        let rates: f64 = ["entailment_rate", "neutral_rate", "contradiction_rate"]
            .iter()
            .map(|k| s[k].as_f64().unwrap())
            .sum();
        assert!((rates - 1.0).abs() < 1e-12);
    }
}

#[test]
fn weekly_and_recommend_outputs() {
    let ws = Workspace::new(30);
    assert!(ws.run(&["analyze", "--mock-backends", "--per-class", "30"]).status.success());
    assert!(ws.run(&["weekly", "--mock-backends"]).status.success());
    let weekly_path = ws.out().join("weekly.jsonl");
    let first = fs::read(&weekly_path).unwrap();
    let weekly = lines(&weekly_path);
    assert_eq!(weekly.len(), 5);
    for w in &weekly {
        assert_eq!(w["week"]["week"], 1);
        assert_eq!(w["summary"]["n"], 100);
        assert!(w["summary"]["emotions"]["anger"].is_number());
        assert_eq!(w["advice"]["status"], "ok");
    }
    assert_eq!(lines(&ws.out().join("browsing_log.jsonl")).len(), 500);
    fs::remove_file(&weekly_path).unwrap();
    assert!(ws.run(&["weekly", "--mock-backends"]).status.success());
    assert_eq!(fs::read(&weekly_path).unwrap(), first);

    assert!(ws.run(&["recommend", "--mock-backends"]).status.success());
    let recs = lines(&ws.out().join("recommendations.jsonl"));
    let modes: Vec<&str> = recs.iter().map(|r| r["mode"].as_str().unwrap()).collect();
    assert_eq!(modes, ["COOL", "BALANCED", "RAW"]);
}

#[test]
fn unparseable_recommendation_fails() {
    let ws = Workspace::new(2);
    let (url, hits) = serve_forever(r#"{"text": "MODE: MILD\nREASON: Softer."}"#);
    let personas = ws.root.join("personas.json");
    fs::write(&personas, r#"[{"id": "PX", "description": "Reads everything calmly."}]"#).unwrap();
    let cfg = ws.config(&format!(
        "personas_path = {:?}\n[backends.chat]\nendpoint = \"{url}\"\n",
        personas.to_str().unwrap()
    ));
    let o = ws.run(&["recommend", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("MILD"), "{}", stderr(&o));
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn report_renders_markdown() {
    let ws = Workspace::new(6);
    let cfg = ws.config("consumers = 2\ntexts_per_consumer = 10\n");
    let o = ws.run(&["run", "--config", &cfg, "--mock-backends", "--per-class", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let md = fs::read_to_string(ws.out().join("report.md")).unwrap();
    for n in 1..=7 {
        assert!(md.contains(&format!("## Table {n}:")));
    }
    assert!(md.contains("Self-check"));
    let fig3 = fs::read_to_string(ws.out().join("fig3_scatter.csv")).unwrap();
    assert_eq!(fig3.lines().count(), 1 + 2 * 20);
}
