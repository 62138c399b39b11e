use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::metrics::{affine_fit, exact_topk_oracle, ndcg_at_k, precision_recall_at_k, summarize};
use super::synth::{gen_queries, gen_synthetic_corpus};
use super::EvalError;
use crate::index::{framed_len, BuildTimings, EmbeddingRecord, IndexConfig, PirIndex};
use crate::service::{
    Client, EntryMode, Frame, InProcess, PirServer, QueryTrace, SearchOptions, ServiceError, System, Transport,
};
use crate::service::wire::{PIR_ANSWER, SCORE_ANSWER};

/// Sweep configuration, read from a flat TOML file. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// Any of "pir-rag", "graph", "tiptoe".
    pub systems: Vec<String>,
    pub dim: usize,
    /// Cluster count; 0 means round(sqrt(n_docs)).
    pub k: usize,
    /// Results per query and the K of every metric and content fetch.
    pub top_k: usize,
    /// Oracle neighbours judged relevant per query.
    pub judged: usize,
    pub hops: usize,
    pub beam: usize,
    pub degree: usize,
    pub queries: usize,
    pub n_blobs: usize,
    pub blob_std: f64,
    pub query_noise: f64,
    pub text_len: usize,
    pub chunk_size: usize,
    pub lwe_dim: usize,
    pub corpus_seed: u64,
    pub query_seed: u64,
    pub index_seed: u64,
    pub client_seed: u64,
    /// Run the systems of one corpus size concurrently. Timings then include
    /// contention between cells.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![500, 1000, 2000, 5000],
            systems: System::ALL.iter().map(|s| s.label().to_string()).collect(),
            dim: 32,
            k: 0,
            top_k: 10,
            judged: 10,
            hops: 4,
            beam: 8,
            degree: 16,
            queries: 100,
            n_blobs: 50,
            blob_std: 0.15,
            query_noise: 0.05,
            text_len: 32,
            chunk_size: 256,
            lwe_dim: 1024,
            corpus_seed: 1,
            query_seed: 2,
            index_seed: 3,
            client_seed: 4,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, EvalError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.parsed_systems()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn parsed_systems(&self) -> Result<Vec<System>, EvalError> {
        self.systems
            .iter()
            .map(|s| s.parse::<System>().map_err(EvalError::InvalidConfig))
            .collect()
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            top_k: self.top_k,
            hops: self.hops,
            beam: self.beam,
            entry: EntryMode::Routed,
            fetch_content: true,
        }
    }

    fn validate(&self) -> Result<Vec<System>, EvalError> {
        let systems = self.parsed_systems()?;
        if self.top_k == 0 || self.judged == 0 || self.queries == 0 {
            return Err(EvalError::InvalidConfig("top_k, judged and queries must be positive".into()));
        }
        Ok(systems)
    }

    fn index_config(&self, systems: &[System]) -> IndexConfig {
        IndexConfig {
            k: (self.k > 0).then_some(self.k),
            chunk_size: self.chunk_size,
            lwe_dim: self.lwe_dim,
            with_docs: systems.iter().any(|&s| s != System::PirRag),
            with_graph: systems.contains(&System::Graph),
            graph_degree: self.degree,
            with_scoring: systems.contains(&System::Scoring),
            ..IndexConfig::default()
        }
        .seeded(self.index_seed)
    }
}

/// One CSV row per (system, corpus size). Byte counts and `pir_ops` are per
/// query. Bytes cover retrieval only; `pir_ops` and `rag_ready_query_ms`
/// cover the full content-delivering query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub system: String,
    pub n_docs: usize,
    pub k_clusters: usize,
    pub setup_ms: f64,
    pub query_ms_mean: f64,
    pub query_ms_p50: f64,
    pub query_ms_p95: f64,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub setup_bytes: u64,
    pub pir_ops: u64,
    pub rag_ready_query_ms: f64,
    pub ndcg10: f64,
    pub precision10: f64,
    pub recall10: f64,
    /// "ok", or "failed: <reason>".
    pub status: String,
}

impl BenchRow {
    fn failed(system: &str, n_docs: usize, k_clusters: usize, reason: impl std::fmt::Display) -> Self {
        Self {
            system: system.into(),
            n_docs,
            k_clusters,
            setup_ms: 0.0,
            query_ms_mean: 0.0,
            query_ms_p50: 0.0,
            query_ms_p95: 0.0,
            uplink_bytes: 0,
            downlink_bytes: 0,
            setup_bytes: 0,
            pir_ops: 0,
            rag_ready_query_ms: 0.0,
            ndcg10: 0.0,
            precision10: 0.0,
            recall10: 0.0,
            status: format!("failed: {reason}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Index shape per corpus size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n_docs: usize,
    pub k_clusters: usize,
    pub max_cluster_bytes: usize,
    pub cluster_matrix_rows: usize,
}

/// Affine fits of PIR-RAG communication across the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub downlink_vs_max_cluster_bytes_r2: f64,
    pub uplink_vs_k_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub sizes: Vec<SizeSummary>,
    pub rows: Vec<BenchRow>,
    pub scaling: Option<ScalingFit>,
}

impl BenchReport {
    pub fn row(&self, system: System, n_docs: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.system == system.label() && r.n_docs == n_docs)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Counts answers coming back from the server, independently of the
/// client's own trace.
struct CountingTransport<T> {
    inner: T,
    answers: u64,
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn round_trip(&mut self, request: &Frame) -> Result<Frame, ServiceError> {
        let f = self.inner.round_trip(request)?;
        if f.msg_type == PIR_ANSWER || f.msg_type == SCORE_ANSWER {
            self.answers += 1;
        }
        Ok(f)
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn setup_ms(system: System, t: &BuildTimings) -> f64 {
    ms(t.kmeans)
        + match system {
            System::PirRag => ms(t.clusters),
            System::Graph => ms(t.graph) + ms(t.docs),
            System::Scoring => ms(t.scoring) + ms(t.docs),
        }
}

struct Workload<'a> {
    server: &'a PirServer,
    queries: &'a [Vec<f32>],
    judgments: &'a [HashSet<u64>],
    timings: &'a BuildTimings,
    cfg: &'a BenchConfig,
}

fn run_cell(system: System, w: &Workload) -> Result<BenchRow, EvalError> {
    let transport = CountingTransport {
        inner: InProcess::new(w.server),
        answers: 0,
    };
    let mut client = Client::connect(transport, system.sections(), w.cfg.client_seed)?;
    let opts = w.cfg.search_options();
    let k = w.cfg.top_k;

    let mut traces: Vec<QueryTrace> = Vec::with_capacity(w.queries.len());
    let (mut ndcg, mut prec, mut rec) = (0.0, 0.0, 0.0);
    for (q, rel) in w.queries.iter().zip(w.judgments) {
        let (_, trace) = client.search(system, q, &opts)?;
        ndcg += ndcg_at_k(&trace.doc_ids, rel, k);
        let (p, r) = precision_recall_at_k(&trace.doc_ids, rel, k);
        prec += p;
        rec += r;
        traces.push(trace);
    }
    let nq = traces.len() as f64;

    // A cluster smaller than K yields fewer results and so fewer content
    // fetches; the per-query figure is the mean.
    let client_ops: u64 = traces.iter().map(|t| t.pir_op_count).sum();
    let served = client.transport_mut().answers;
    if served != client_ops {
        return Err(EvalError::Accounting(format!(
            "client counted {client_ops} operations, server answered {served}"
        )));
    }
    let pir_ops = (client_ops as f64 / nq).round() as u64;

    let retrieval: Vec<f64> = traces.iter().map(|t| t.retrieval_ms).collect();
    let (mean, p50, p95) = summarize(&retrieval);
    let mean_of = |f: fn(&QueryTrace) -> u64| (traces.iter().map(|t| f(t) as f64).sum::<f64>() / nq).round() as u64;
    Ok(BenchRow {
        system: system.label().into(),
        n_docs: w.server.index().n_docs(),
        k_clusters: w.server.index().k(),
        setup_ms: setup_ms(system, w.timings),
        query_ms_mean: mean,
        query_ms_p50: p50,
        query_ms_p95: p95,
        uplink_bytes: mean_of(|t| t.uplink_bytes - t.content_uplink_bytes),
        downlink_bytes: mean_of(|t| t.downlink_bytes - t.content_downlink_bytes),
        setup_bytes: client.setup_bytes(),
        pir_ops,
        rag_ready_query_ms: traces.iter().map(|t| t.total_ms).sum::<f64>() / nq,
        ndcg10: ndcg / nq,
        precision10: prec / nq,
        recall10: rec / nq,
        status: "ok".into(),
    })
}

fn size_summary(index: &PirIndex, corpus: &[EmbeddingRecord]) -> SizeSummary {
    let max_cluster_bytes = index
        .model
        .members()
        .iter()
        .map(|m| framed_len(m.iter().map(|&i| &corpus[i])))
        .max()
        .unwrap_or(0);
    SizeSummary {
        n_docs: index.n_docs(),
        k_clusters: index.k(),
        max_cluster_bytes,
        cluster_matrix_rows: index.cluster.chunks.m_rows(),
    }
}

fn scaling_fit(sizes: &[SizeSummary], rows: &[BenchRow]) -> Option<ScalingFit> {
    let pts: Vec<(&SizeSummary, &BenchRow)> = sizes
        .iter()
        .filter_map(|s| {
            rows.iter()
                .find(|r| r.system == System::PirRag.label() && r.n_docs == s.n_docs && r.is_ok())
                .map(|r| (s, r))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let bytes: Vec<f64> = pts.iter().map(|(s, _)| s.max_cluster_bytes as f64).collect();
    let ks: Vec<f64> = pts.iter().map(|(s, _)| s.k_clusters as f64).collect();
    let down: Vec<f64> = pts.iter().map(|(_, r)| r.downlink_bytes as f64).collect();
    let up: Vec<f64> = pts.iter().map(|(_, r)| r.uplink_bytes as f64).collect();
    Some(ScalingFit {
        downlink_vs_max_cluster_bytes_r2: affine_fit(&bytes, &down).2,
        uplink_vs_k_r2: affine_fit(&ks, &up).2,
    })
}

/// Runs every (size, system) cell. A failing cell is recorded in its row's
/// status and the sweep continues; only an invalid configuration is an error.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, EvalError> {
    let systems = cfg.validate()?;
    let mut rows = Vec::new();
    let mut sizes = Vec::new();

    for &n in &cfg.sizes {
        let prepared = (|| -> Result<_, EvalError> {
            let corpus = gen_synthetic_corpus(n, cfg.dim, cfg.n_blobs, cfg.blob_std, cfg.text_len, cfg.corpus_seed)?;
            let queries = gen_queries(&corpus, cfg.queries, cfg.query_noise, cfg.query_seed)?;
            let judgments: Vec<HashSet<u64>> = queries
                .iter()
                .map(|q| exact_topk_oracle(q, &corpus, cfg.judged).into_iter().collect())
                .collect();
            let (index, timings) = PirIndex::build_timed(&corpus, &cfg.index_config(&systems))?;
            Ok((corpus, queries, judgments, index, timings))
        })();
        let (corpus, queries, judgments, index, timings) = match prepared {
            Ok(p) => p,
            Err(e) => {
                warn!("size {n}: {e}");
                let k = if cfg.k > 0 { cfg.k } else { crate::index::default_cluster_count(n) };
                rows.extend(systems.iter().map(|s| BenchRow::failed(s.label(), n, k, &e)));
                continue;
            }
        };
        sizes.push(size_summary(&index, &corpus));
        let server = PirServer::new(index);
        let w = Workload {
            server: &server,
            queries: &queries,
            judgments: &judgments,
            timings: &timings,
            cfg,
        };
        let k = server.index().k();
        let finish = |s: System, r: Result<BenchRow, EvalError>| {
            r.unwrap_or_else(|e| {
                warn!("{} at {n}: {e}", s.label());
                BenchRow::failed(s.label(), n, k, e)
            })
        };
        let cell_rows: Vec<BenchRow> = if cfg.parallel {
            std::thread::scope(|scope| {
                let handles: Vec<_> = systems
                    .iter()
                    .map(|&s| {
                        let w = &w;
                        (s, scope.spawn(move || run_cell(s, w)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|(s, h)| {
                        let r = h
                            .join()
                            .unwrap_or_else(|_| Err(EvalError::InvalidConfig("cell panicked".into())));
                        finish(s, r)
                    })
                    .collect()
            })
        } else {
            systems.iter().map(|&s| finish(s, run_cell(s, &w))).collect()
        };
        for r in &cell_rows {
            info!(
                "{} n={} ndcg={:.3} query={:.2}ms rag_ready={:.2}ms ops={} {}",
                r.system, r.n_docs, r.ndcg10, r.query_ms_mean, r.rag_ready_query_ms, r.pir_ops, r.status
            );
        }
        rows.extend(cell_rows);
    }

    let scaling = scaling_fit(&sizes, &rows);
    Ok(BenchReport {
        config: cfg.clone(),
        sizes,
        rows,
        scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchConfig {
        BenchConfig {
            sizes: vec![120, 240],
            k: 4,
            dim: 8,
            n_blobs: 6,
            queries: 4,
            lwe_dim: 64,
            degree: 6,
            hops: 2,
            beam: 3,
            top_k: 5,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn toml_is_flat_and_partial() {
        let cfg = BenchConfig::from_toml_str("sizes = [100, 200]\nsystems = [\"pir-rag\"]\nhops = 3\n").unwrap();
        assert_eq!(cfg.sizes, vec![100, 200]);
        assert_eq!(cfg.hops, 3);
        assert_eq!(cfg.beam, BenchConfig::default().beam);
        assert!(BenchConfig::from_toml_str("systems = [\"hnsw\"]").is_err());
        assert!(BenchConfig::from_toml_str("bogus = 1").is_err());
    }

    #[test]
    fn rows_follow_the_sweep_and_count_operations() {
        let cfg = small();
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.rows.len(), 6);
        for r in &report.rows {
            assert!(r.is_ok(), "{r:?}");
            let expect = match r.system.parse::<System>().unwrap() {
                System::PirRag => 1,
                System::Scoring => 1 + cfg.top_k as u64,
                System::Graph => (cfg.hops * cfg.beam + cfg.top_k) as u64,
            };
            assert_eq!(r.pir_ops, expect);
            for m in [r.ndcg10, r.precision10, r.recall10] {
                assert!((0.0..=1.0).contains(&m));
            }
        }
        for r in &report.rows {
            assert!(r.rag_ready_query_ms >= r.query_ms_mean);
            assert!(r.query_ms_p50 <= r.query_ms_p95);
        }

        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(
            "system,n_docs,k_clusters,setup_ms,query_ms_mean,query_ms_p50,query_ms_p95,uplink_bytes,\
             downlink_bytes,setup_bytes,pir_ops,rag_ready_query_ms,ndcg10,precision10,recall10,status\n"
        ));
        assert_eq!(text.lines().count(), 7);
        let back: BenchReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn failed_cells_do_not_stop_the_sweep() {
        let cfg = BenchConfig {
            sizes: vec![4, 120],
            systems: vec!["pir-rag".into()],
            ..small()
        };
        let report = run_benchmark(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].status.starts_with("failed"));
        assert!(report.rows[1].is_ok());
    }

    #[test]
    fn parallel_matches_sequential_counts() {
        let cfg = BenchConfig {
            sizes: vec![120],
            parallel: true,
            ..small()
        };
        let report = run_benchmark(&cfg).unwrap();
        let seq = run_benchmark(&BenchConfig { parallel: false, ..cfg }).unwrap();
        for (a, b) in report.rows.iter().zip(&seq.rows) {
            assert_eq!((a.pir_ops, a.uplink_bytes, a.downlink_bytes), (b.pir_ops, b.uplink_bytes, b.downlink_bytes));
            assert_eq!(a.ndcg10, b.ndcg10);
        }
    }
}
