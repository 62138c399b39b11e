//! Graph baseline: recall, access shape and robustness to the entry point.

use std::collections::HashSet;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use pirrag_core::eval::{exact_topk_oracle, gen_queries, gen_synthetic_corpus, precision_recall_at_k};
use pirrag_core::graph::{decode_node_record, routed_entries, traverse, GraphError, TraversalConfig};
use pirrag_core::scoring::{corpus_maxabs, quantize_embedding, quantized_dot};
use pirrag_core::service::{wire, Frame, ServiceError, Transport};
use pirrag_core::vecmath::{dot, normalized};
use pirrag_core::{
    Client, EntryMode, InProcess, IndexConfig, PirIndex, PirServer, SearchOptions, System,
};

struct Fixture {
    queries: Vec<Vec<f32>>,
    truth: Vec<Vec<u64>>,
    server: PirServer,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let corpus = gen_synthetic_corpus(2000, 32, 50, 0.15, 16, 21).unwrap();
        let queries = gen_queries(&corpus, 100, 0.05, 22).unwrap();
        let truth = queries.iter().map(|q| exact_topk_oracle(q, &corpus, 10)).collect();
        let cfg = IndexConfig {
            with_graph: true,
            graph_degree: 16,
            lwe_dim: 256,
            ..IndexConfig::default()
        }
        .seeded(23);
        let server = PirServer::new(PirIndex::build(&corpus, &cfg).unwrap());
        Fixture { queries, truth, server }
    })
}

/// Records the message type and length of every request.
struct Recording<'a> {
    inner: InProcess<'a>,
    log: Vec<(u8, usize)>,
}

impl Transport for Recording<'_> {
    fn round_trip(&mut self, request: &Frame) -> Result<Frame, ServiceError> {
        self.log.push((request.msg_type, request.payload.len()));
        self.inner.round_trip(request)
    }
}

fn graph_opts(entry: EntryMode) -> SearchOptions {
    SearchOptions {
        top_k: 10,
        hops: 4,
        beam: 8,
        entry,
        fetch_content: false,
    }
}

fn mean_recall(entry: EntryMode, seed: u64) -> f64 {
    let f = fixture();
    let mut client = Client::connect(InProcess::new(&f.server), System::Graph.sections(), seed).unwrap();
    let total: f64 = f
        .queries
        .iter()
        .zip(&f.truth)
        .map(|(q, truth)| {
            let (res, _) = client.search(System::Graph, q, &graph_opts(entry)).unwrap();
            let ids: Vec<u64> = res.iter().map(|r| r.doc_id).collect();
            let rel: HashSet<u64> = truth.iter().copied().collect();
            precision_recall_at_k(&ids, &rel, 10).1
        })
        .sum();
    total / f.queries.len() as f64
}

#[test]
fn routed_recall_at_ten() {
    let r = mean_recall(EntryMode::Routed, 1);
    assert!(r >= 0.8, "recall@10 {r}");
}

#[test]
fn access_shape_is_fixed() {
    let f = fixture();
    let mut shapes = HashSet::new();
    for (i, q) in f.queries.iter().enumerate().take(30) {
        let rec = Recording { inner: InProcess::new(&f.server), log: Vec::new() };
        let mut client = Client::connect(rec, System::Graph.sections(), 40 + i as u64).unwrap();
        client.transport_mut().log.clear();
        let (_, trace) = client.search(System::Graph, q, &graph_opts(EntryMode::Routed)).unwrap();
        assert_eq!(trace.pir_op_count, 32);
        let log = client.transport_mut().log.clone();
        assert_eq!(log.len(), 32);
        shapes.insert(log);
    }
    // Every query produced the same sequence of request types and sizes.
    assert_eq!(shapes.len(), 1);
    let shape = shapes.into_iter().next().unwrap();
    assert!(shape.iter().all(|&(ty, _)| ty == wire::PIR_QUERY));
}

#[test]
fn results_do_not_depend_on_client_randomness() {
    let f = fixture();
    let mut a = Client::connect(InProcess::new(&f.server), System::Graph.sections(), 100).unwrap();
    let mut b = Client::connect(InProcess::new(&f.server), System::Graph.sections(), 200).unwrap();
    for q in f.queries.iter().take(20) {
        let ra = a.search(System::Graph, q, &graph_opts(EntryMode::Routed)).unwrap().0;
        let rb = b.search(System::Graph, q, &graph_opts(EntryMode::Routed)).unwrap().0;
        assert_eq!(ra, rb);
    }
}

#[test]
fn recall_is_stable_across_single_entry_points() {
    let mut rng = ChaCha20Rng::seed_from_u64(24);
    let recalls: Vec<f64> = (0..5)
        .map(|i| mean_recall(EntryMode::Node(rng.random_range(0..2000)), 300 + i))
        .collect();
    let lo = recalls.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = recalls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    eprintln!("single-entry recalls {recalls:?}");
    assert!(hi - lo < 0.1, "recall spread {recalls:?}");
}

#[test]
fn quantization_preserves_top_one() {
    let mut rng = ChaCha20Rng::seed_from_u64(25);
    let d = 128;
    let vec = |rng: &mut ChaCha20Rng| {
        let v: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        normalized(&v)
    };
    let docs: Vec<Vec<f32>> = (0..1000).map(|_| vec(&mut rng)).collect();
    let maxabs = corpus_maxabs(docs.iter().map(|v| v.as_slice()));
    let qdocs: Vec<Vec<i8>> = docs.iter().map(|v| quantize_embedding(v, maxabs).unwrap()).collect();
    let trials = 200;
    let agree = (0..trials)
        .filter(|_| {
            let q = vec(&mut rng);
            let qq = quantize_embedding(&q, maxabs).unwrap();
            let exact = (0..docs.len())
                .max_by(|&a, &b| dot(&q, &docs[a]).total_cmp(&dot(&q, &docs[b])))
                .unwrap();
            let quant = (0..docs.len()).max_by_key(|&i| quantized_dot(&qq, &qdocs[i])).unwrap();
            exact == quant
        })
        .count();
    assert!(agree * 100 >= trials * 95, "top-1 agreement {agree}/{trials}");
}

#[test]
fn recall_is_stable_across_random_cluster_entries() {
    // Routed traversal with each cluster's entry replaced by a random member.
    let f = fixture();
    let index = f.server.index();
    let g = index.graph.as_ref().unwrap();
    let members = index.model.members();
    let d = index.dim;
    let cfg = TraversalConfig { max_hops: 4, beam: 8, top_k: 10 };
    let mut rng = ChaCha20Rng::seed_from_u64(26);
    let recalls: Vec<f64> = (0..5)
        .map(|_| {
            let entries: Vec<u32> = members
                .iter()
                .map(|m| m[rng.random_range(0..m.len())] as u32)
                .collect();
            let total: f64 = f
                .queries
                .iter()
                .zip(&f.truth)
                .map(|(q, truth)| {
                    let starts = routed_entries(q, &index.model.centroids, &entries, 8);
                    let qq = quantize_embedding(q, g.maxabs).unwrap();
                    let out = traverse(&qq, &starts, g.n_nodes(), cfg, |batch: &[u32]| {
                        batch
                            .iter()
                            .map(|&n| decode_node_record(&g.nodes.column(n as usize), d, g.degree))
                            .collect::<Result<Vec<_>, GraphError>>()
                    })
                    .unwrap();
                    let ids: Vec<u64> = out.results.iter().map(|&(n, _)| index.doc_ids[n as usize]).collect();
                    let rel: HashSet<u64> = truth.iter().copied().collect();
                    precision_recall_at_k(&ids, &rel, 10).1
                })
                .sum();
            total / f.queries.len() as f64
        })
        .collect();
    let lo = recalls.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = recalls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    eprintln!("random cluster-entry recalls {recalls:?}");
    assert!(lo >= 0.8, "recall {recalls:?}");
    assert!(hi - lo < 0.1, "recall spread {recalls:?}");
}
