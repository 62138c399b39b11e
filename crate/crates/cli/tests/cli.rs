//! Drives the `pirrag` binary through its subcommands.

use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output};
use std::thread::sleep;
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_pirrag");

fn run(args: &[&str]) -> Output {
    let out = Command::new(BIN).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "pirrag {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn start_server(index: &Path) -> (Server, String) {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let child = Command::new(BIN)
        .args(["serve", "--index", path(index), "--listen", &addr])
        .spawn()
        .unwrap();
    let server = Server(child);
    let deadline = Instant::now() + Duration::from_secs(30);
    while TcpStream::connect(&addr).is_err() {
        assert!(Instant::now() < deadline, "server did not start");
        sleep(Duration::from_millis(50));
    }
    (server, addr)
}

#[test]
fn corpus_to_query_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let index = dir.path().join("index.prag");
    run(&["gen-corpus", "--out", path(&corpus), "--n-docs", "300", "--dim", "8", "--seed", "5"]);
    run(&[
        "build-index", "--corpus", path(&corpus), "--out", path(&index), "--lwe-dim", "256", "--seed", "6",
        "--graph", "--degree", "8", "--scoring",
    ]);

    let line = std::fs::read_to_string(&corpus).unwrap().lines().nth(5).unwrap().to_owned();
    let doc: serde_json::Value = serde_json::from_str(&line).unwrap();
    let id = doc["id"].as_u64().unwrap();
    let text = doc["text"].as_str().unwrap().to_owned();
    let embedding = doc["embedding"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap().to_string())
        .collect::<Vec<_>>()
        .join(",");

    let (_server, addr) = start_server(&index);
    for system in ["pir-rag", "graph", "tiptoe"] {
        let out = run(&[
            "query", "--server", &addr, "--embedding", &embedding, "--topk", "3", "--system", system,
            "--fetch-content", "--seed", "7", "--trace",
        ]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        let rows: Vec<Vec<&str>> = stdout.lines().map(|l| l.split('\t').collect()).collect();
        assert_eq!(rows.len(), 3, "{system}: {stdout}");
        assert_eq!(rows[0][1].parse::<u64>().unwrap(), id, "{system}: {stdout}");
        assert_eq!(rows[0][3], text, "{system}");
        // The trace is the JSON object after any log lines.
        let stderr = String::from_utf8(out.stderr).unwrap();
        let trace: serde_json::Value = serde_json::from_str(&stderr[stderr.find('{').unwrap()..]).unwrap();
        assert!(trace["pir_op_count"].as_u64().unwrap() >= 1);
    }
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    let csv = dir.path().join("out.csv");
    std::fs::write(
        &cfg,
        "sizes = [150, 300, 600]\nqueries = 5\ndim = 8\nn_blobs = 5\nlwe_dim = 128\nhops = 2\nbeam = 2\ndegree = 4\n",
    )
    .unwrap();
    run(&["bench", "--config", path(&cfg), "--out", path(&csv)]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("system,n_docs,k_clusters,"));
    assert_eq!(lines.count(), 9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 9);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = Command::new(BIN)
        .args(["build-index", "--corpus", path(&missing), "--out", path(&dir.path().join("x"))])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let out = Command::new(BIN).args(["bench", "--config", path(&cfg)]).output().unwrap();
    assert!(!out.status.success());
}
