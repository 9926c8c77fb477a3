use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;

use shortlens::backend::{BackendServer, StubBackend};
use shortlens::pipeline::smoke::{fill_sheet, smoke_script};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shortlens"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stub_server() -> BackendServer {
    BackendServer::spawn(Arc::new(StubBackend::new(smoke_script())), "127.0.0.1:0").unwrap()
}

fn fixture(dir: &Path, backend: &str) -> String {
    let o = run(&["smoke-fixture", "--out", dir.to_str().unwrap(), "--backend", backend]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    String::from_utf8(o.stdout).unwrap().trim().to_string()
}

fn closed_port_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    format!("http://127.0.0.1:{}", l.local_addr().unwrap().port())
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["probe"])), 1, "neither --config nor --store");
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("s");
    let o = run(&["probe", "--store", store.to_str().unwrap(), "--workers", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("workers.asr"), "{}", stderr(&o));
    let o = run(&["report", "--store", store.to_str().unwrap(), "--out", "x", "--tables", "nope"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn missing_upstream_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path(), "http://127.0.0.1:9");
    let o = run(&["link", "--config", &cfg]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("requires: transcribe"), "{}", stderr(&o));
}

#[test]
fn backend_down_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let url = closed_port_url();
    let cfg = fixture(tmp.path(), &url);
    assert_eq!(code(&run(&["ingest", "--config", &cfg])), 0);
    let o = run(&["probe", "--config", &cfg]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(code(&run(&["conformance", "--backend", &url])), 3);
}

#[test]
fn full_run_report_and_evaluation() {
    let server = stub_server();
    let url = server.base_url();
    let mut reports = Vec::new();
    for _ in 0..2 {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = fixture(tmp.path(), &url);
        let o = run(&["run", "--config", &cfg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let stages: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(stages.as_array().unwrap().len(), 8);

        // rerun: everything skipped
        let o = run(&["sample", "--config", &cfg]);
        let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(r["processed"].as_array().unwrap().len(), 0);
        assert_eq!(r["skipped"].as_array().unwrap().len(), 3);

        let o = run(&["evaluate", "--config", &cfg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = run(&["evaluate", "--config", &cfg]);
        assert_eq!(code(&o), 4, "unannotated sheet: {}", stderr(&o));
        fill_sheet(&tmp.path().join("store/eval/sheet.csv"), |_, _| true).unwrap();
        assert_eq!(code(&run(&["evaluate", "--config", &cfg])), 0);

        let out = tmp.path().join("report");
        let o = run(&["report", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        assert_eq!(files.len(), 10);
        assert!(files.iter().all(|(_, b)| !b.is_empty()));
        reports.push(files);
    }
    assert_eq!(reports[0], reports[1], "same seed, same bytes");
}

#[test]
fn dry_run_touches_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture(tmp.path(), "http://127.0.0.1:9");
    let o = run(&["ingest", "--config", &cfg, "--dry-run"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["dry_run"], true);
    assert_eq!(r["processed"].as_array().unwrap().len(), 3);
    let store = tmp.path().join("store");
    assert!(!store.exists() || std::fs::read_dir(&store).unwrap().next().is_none());
}

#[test]
fn serve_stub_passes_conformance() {
    let tmp = tempfile::tempdir().unwrap();
    fixture(tmp.path(), "http://127.0.0.1:9");
    let script = tmp.path().join("stub_script.json");
    let mut child = bin()
        .args(["serve-stub", "--addr", "127.0.0.1:0", "--script", script.to_str().unwrap()])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let o = run(&["conformance", "--backend", &url]);
    child.kill().unwrap();
    let _ = child.wait();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn gold_utilities() {
    let tmp = tempfile::tempdir().unwrap();
    let gold = tmp.path().join("gold.jsonl");
    let mut lines = String::new();
    for (i, label) in ["negative", "neutral", "positive"].iter().cycle().take(30).enumerate() {
        lines.push_str(&format!(
            "{{\"text\":\"Hamas statement number {i}\",\"aspect\":\"Hamas\",\"group\":\"Islamism\",\"label\":\"{label}\",\"provenance\":\"base_gold\"}}\n"
        ));
    }
    std::fs::write(&gold, lines).unwrap();
    let o = run(&["gold", "stats", "--gold", gold.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Islamism,10,10,10,30"), "{text}");
    assert!(text.ends_with("total,10,10,10,30\n"));

    let out = tmp.path().join("split");
    let o = run(&["gold", "split", "--gold", gold.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "train: 24\ndev: 3\ntest: 3\n");
}
