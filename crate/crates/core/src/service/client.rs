use std::collections::HashMap;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::setup::{SetupInfo, SECTION_DOCS, SECTION_GRAPH, SECTION_SCORING};
use super::trace::{ms, QueryTrace, RankedResult};
use super::transport::Transport;
use super::wire::{Frame, Message, Target};
use super::ServiceError;
use crate::graph::{decode_node_record, routed_entries, traverse, NodeRecord, TraversalConfig};
use crate::index::{unpack_cluster, EmbeddingRecord};
use crate::lwe::{ColumnClient, Residues};
use crate::scoring::{encode_mod_p, quantize_embedding, scores_for_rows, select_topk_ids, QUANT_SCALE};
use crate::vecmath::{cosine, norm};

/// The three retrieval architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum System {
    /// Route to one cluster, fetch it whole, re-rank locally.
    PirRag,
    /// Beam search over a k-NN graph, one PIR fetch per visited node.
    Graph,
    /// Homomorphic scoring within a cluster named in the clear.
    Scoring,
}

impl System {
    pub const ALL: [System; 3] = [System::PirRag, System::Graph, System::Scoring];

    pub fn label(self) -> &'static str {
        match self {
            System::PirRag => "pir-rag",
            System::Graph => "graph",
            System::Scoring => "tiptoe",
        }
    }

    /// Setup sections this system's client downloads.
    pub fn sections(self) -> u8 {
        match self {
            System::PirRag => 0,
            System::Graph => SECTION_GRAPH | SECTION_DOCS,
            System::Scoring => SECTION_SCORING | SECTION_DOCS,
        }
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pir-rag" | "pirrag" => Ok(System::PirRag),
            "graph" => Ok(System::Graph),
            "tiptoe" | "scoring" => Ok(System::Scoring),
            other => Err(format!("unknown system '{other}' (expected pir-rag, graph or tiptoe)")),
        }
    }
}

/// Where graph traversal starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntryMode {
    /// Entry nodes of the `beam` clusters closest to the query.
    #[default]
    Routed,
    /// The corpus medoid.
    Medoid,
    /// A caller-chosen node.
    Node(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub top_k: usize,
    pub hops: usize,
    pub beam: usize,
    pub entry: EntryMode,
    /// Fetch the content of every result privately. Cluster fetches always
    /// carry content, so this only changes the baselines.
    pub fetch_content: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            top_k: 10,
            hops: 4,
            beam: 8,
            entry: EntryMode::Routed,
            fetch_content: false,
        }
    }
}

/// Index of the most cosine-similar centroid, ties to the smaller index.
pub fn route_query(query: &[f32], centroids: &[Vec<f32>]) -> Result<usize, ServiceError> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in centroids.iter().enumerate() {
        if c.len() != query.len() {
            return Err(ServiceError::DimensionMismatch {
                expected: c.len(),
                found: query.len(),
            });
        }
        let s = cosine(query, c);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((j, s));
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| ServiceError::Protocol("no centroids to route to".into()))
}

/// Cosine re-ranking: descending score, ties to the smaller id, at most `k`.
pub fn rerank_topk(query: &[f32], docs: &[EmbeddingRecord], k: usize) -> Vec<RankedResult> {
    let mut scored: Vec<RankedResult> = docs
        .iter()
        .map(|d| RankedResult {
            doc_id: d.doc_id,
            score: cosine(query, &d.embedding),
            text: d.text.clone(),
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.doc_id.cmp(&b.doc_id)));
    scored.truncate(k);
    scored
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Retrieval,
    Content,
}

/// Client state: setup download, per-matrix decoding material and the
/// randomness for fresh per-query keys.
pub struct Client<T> {
    transport: T,
    info: SetupInfo,
    setup_bytes: u64,
    cluster: ColumnClient,
    docs: Option<ColumnClient>,
    nodes: Option<ColumnClient>,
    scoring: Vec<ColumnClient>,
    doc_column: HashMap<u64, usize>,
    rng: ChaCha20Rng,
}

impl<T: Transport> Client<T> {
    /// Downloads the requested setup sections and prepares decoding state.
    pub fn connect(mut transport: T, sections: u8, rng_seed: u64) -> Result<Self, ServiceError> {
        let request = Message::SetupRequest(Some(sections)).to_frame();
        let response = transport.round_trip(&request)?;
        let setup_bytes = (request.encoded_len() + response.encoded_len()) as u64;
        let info = match Message::from_frame(&response)? {
            Message::SetupResponse(info) => *info,
            other => return Err(unexpected(other)),
        };
        let cluster = ColumnClient::new(info.cluster.params.clone(), info.cluster.hint.clone())?;
        let docs = match &info.docs {
            Some((m, _)) => Some(ColumnClient::new(m.params.clone(), m.hint.clone())?),
            None => None,
        };
        let nodes = match &info.graph {
            Some(g) => Some(ColumnClient::new(g.matrix.params.clone(), g.matrix.hint.clone())?),
            None => None,
        };
        let scoring = match &info.scoring {
            Some(s) => s
                .hints
                .iter()
                .map(|h| ColumnClient::new(s.params.clone(), h.clone()))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let doc_column = info
            .docs
            .as_ref()
            .map(|(_, ids)| ids.iter().enumerate().map(|(j, &id)| (id, j)).collect())
            .unwrap_or_default();
        Ok(Self {
            transport,
            info,
            setup_bytes,
            cluster,
            docs,
            nodes,
            scoring,
            doc_column,
            rng: ChaCha20Rng::seed_from_u64(rng_seed),
        })
    }

    pub fn setup_info(&self) -> &SetupInfo {
        &self.info
    }

    /// Framed bytes of the setup exchange.
    pub fn setup_bytes(&self) -> u64 {
        self.setup_bytes
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    pub fn route(&self, query: &[f32]) -> Result<usize, ServiceError> {
        route_query(query, &self.info.centroids)
    }

    fn seeds(&mut self) -> ([u8; 32], [u8; 32]) {
        let mut k = [0u8; 32];
        let mut e = [0u8; 32];
        self.rng.fill_bytes(&mut k);
        self.rng.fill_bytes(&mut e);
        (k, e)
    }

    fn exchange(&mut self, request: Frame, trace: &mut QueryTrace, phase: Phase) -> Result<Message, ServiceError> {
        let t = Instant::now();
        let response = self.transport.round_trip(&request)?;
        let elapsed = ms(t.elapsed());
        trace.server_ms += elapsed;
        let (up, down) = (request.encoded_len() as u64, response.encoded_len() as u64);
        trace.uplink_bytes += up;
        trace.downlink_bytes += down;
        trace.pir_op_count += 1;
        if phase == Phase::Content {
            trace.content_uplink_bytes += up;
            trace.content_downlink_bytes += down;
            trace.content_pir_ops += 1;
            trace.content_ms += elapsed;
        }
        match Message::from_frame(&response)? {
            Message::Error { code, message } => Err(ServiceError::Server { code, message }),
            m => Ok(m),
        }
    }

    /// One private column fetch: encrypt a selector, one round trip, decode.
    fn fetch_column(
        &mut self,
        target: Target,
        col: usize,
        trace: &mut QueryTrace,
        phase: Phase,
    ) -> Result<Vec<u8>, ServiceError> {
        let (key_seed, noise_seed) = self.seeds();
        let t = Instant::now();
        let client = match target {
            Target::Cluster => &self.cluster,
            Target::Doc => self.docs.as_ref().ok_or(ServiceError::Unavailable("document matrix"))?,
            Target::Node => self.nodes.as_ref().ok_or(ServiceError::Unavailable("node matrix"))?,
        };
        let (key, query) = client.encrypt_selector(col, key_seed, noise_seed)?;
        let rows = client.n_rows();
        let spent = ms(t.elapsed());
        trace.encrypt_ms += spent;
        if phase == Phase::Content {
            trace.content_ms += spent;
        }

        let answer = match self.exchange(Message::PirQuery { target, query }.to_frame(), trace, phase)? {
            Message::PirAnswer(r) => r,
            other => return Err(unexpected(other)),
        };
        if answer.len() != rows {
            return Err(ServiceError::DecodeSizeMismatch {
                expected: rows,
                found: answer.len(),
            });
        }

        let t = Instant::now();
        let client = match target {
            Target::Cluster => &self.cluster,
            Target::Doc => self.docs.as_ref().unwrap(),
            Target::Node => self.nodes.as_ref().unwrap(),
        };
        let bytes = client.decode(&key, answer)?.into_iter().map(|x| x as u8).collect();
        let spent = ms(t.elapsed());
        trace.decode_ms += spent;
        if phase == Phase::Content {
            trace.content_ms += spent;
        }
        Ok(bytes)
    }

    /// Privately downloads cluster `j`'s framed byte stream.
    pub fn fetch_cluster(&mut self, j: usize, trace: &mut QueryTrace) -> Result<Vec<u8>, ServiceError> {
        self.fetch_column(Target::Cluster, j, trace, Phase::Retrieval)
    }

    /// One private content fetch per id.
    pub fn private_fetch_docs(
        &mut self,
        doc_ids: &[u64],
        trace: &mut QueryTrace,
    ) -> Result<Vec<EmbeddingRecord>, ServiceError> {
        let mut out = Vec::with_capacity(doc_ids.len());
        for &id in doc_ids {
            let col = *self.doc_column.get(&id).ok_or(ServiceError::UnknownDocId(id))?;
            let bytes = self.fetch_column(Target::Doc, col, trace, Phase::Content)?;
            let t = Instant::now();
            let mut docs = unpack_cluster(&bytes, self.info.dim)?;
            trace.decode_ms += ms(t.elapsed());
            match (docs.pop(), docs.is_empty()) {
                (Some(d), true) if d.doc_id == id => out.push(d),
                _ => return Err(ServiceError::Protocol(format!("content column for {id} holds something else"))),
            }
        }
        Ok(out)
    }

    /// Privately scores every document of cluster `j` against `query`.
    /// The cluster index travels in the clear.
    pub fn private_score(
        &mut self,
        query: &[f32],
        j: usize,
        trace: &mut QueryTrace,
    ) -> Result<Vec<(u64, i64)>, ServiceError> {
        let info = self.info.scoring.as_ref().ok_or(ServiceError::Unavailable("scoring"))?;
        let client = self.scoring.get(j).ok_or(crate::scoring::ScoringError::UnknownCluster {
            cluster: j,
            k: self.scoring.len(),
        })?;
        let (maxabs, plain_mod, capacity) = (info.maxabs, info.params.plain_mod, info.capacity);
        let (key_seed, noise_seed) = {
            let mut k = [0u8; 32];
            let mut e = [0u8; 32];
            self.rng.fill_bytes(&mut k);
            self.rng.fill_bytes(&mut e);
            (k, e)
        };
        let t = Instant::now();
        let u: Vec<u64> = quantize_embedding(query, maxabs)?
            .into_iter()
            .map(|x| encode_mod_p(x as i64, plain_mod))
            .collect();
        let (key, enc) = client.encrypt(&u, key_seed, noise_seed)?;
        trace.encrypt_ms += ms(t.elapsed());
        let Residues::W64(query) = enc else {
            return Err(ServiceError::Protocol("scoring profile must use 64-bit residues".into()));
        };

        let msg = Message::ScoreQuery { cluster: j as u32, query }.to_frame();
        let answer = match self.exchange(msg, trace, Phase::Retrieval)? {
            Message::ScoreAnswer(r) => r,
            other => return Err(unexpected(other)),
        };
        if answer.len() != capacity {
            return Err(ServiceError::DecodeSizeMismatch {
                expected: capacity,
                found: answer.len(),
            });
        }
        let t = Instant::now();
        let info = self.info.scoring.as_ref().unwrap();
        let decoded = self.scoring[j].decode(&key, Residues::W64(answer))?;
        let scores = scores_for_rows(&decoded, &info.row_doc_ids[j], capacity, plain_mod)?;
        trace.decode_ms += ms(t.elapsed());
        Ok(scores)
    }

    /// Runs one query end to end under `system`.
    pub fn search(
        &mut self,
        system: System,
        query: &[f32],
        opts: &SearchOptions,
    ) -> Result<(Vec<RankedResult>, QueryTrace), ServiceError> {
        if query.len() != self.info.dim {
            return Err(ServiceError::DimensionMismatch {
                expected: self.info.dim,
                found: query.len(),
            });
        }
        let start = Instant::now();
        let mut trace = QueryTrace::new(system.label(), self.setup_bytes);
        let mut results = match system {
            System::PirRag => self.pir_rag(query, opts.top_k, &mut trace)?,
            System::Graph => self.graph(query, opts, &mut trace)?,
            System::Scoring => self.tiptoe(query, opts.top_k, &mut trace)?,
        };
        trace.retrieval_ms = ms(start.elapsed());
        if system != System::PirRag && opts.fetch_content {
            let ids: Vec<u64> = results.iter().map(|r| r.doc_id).collect();
            let docs = self.private_fetch_docs(&ids, &mut trace)?;
            for (r, d) in results.iter_mut().zip(docs) {
                r.text = d.text;
            }
        }
        trace.total_ms = ms(start.elapsed());
        trace.doc_ids = results.iter().map(|r| r.doc_id).collect();
        Ok((results, trace))
    }

    fn pir_rag(&mut self, query: &[f32], k: usize, trace: &mut QueryTrace) -> Result<Vec<RankedResult>, ServiceError> {
        let t = Instant::now();
        let j = self.route(query)?;
        trace.route_ms += ms(t.elapsed());
        let bytes = self.fetch_cluster(j, trace)?;
        let t = Instant::now();
        let docs = unpack_cluster(&bytes, self.info.dim)?;
        trace.decode_ms += ms(t.elapsed());
        let t = Instant::now();
        let out = rerank_topk(query, &docs, k);
        trace.rerank_ms += ms(t.elapsed());
        Ok(out)
    }

    /// Estimated cosine from a quantized inner product.
    fn estimate(score: i64, maxabs: f32, query_norm: f64) -> f64 {
        let unit = maxabs as f64 / QUANT_SCALE as f64;
        if query_norm == 0.0 {
            0.0
        } else {
            score as f64 * unit * unit / query_norm
        }
    }

    fn graph(
        &mut self,
        query: &[f32],
        opts: &SearchOptions,
        trace: &mut QueryTrace,
    ) -> Result<Vec<RankedResult>, ServiceError> {
        let g = self.info.graph.as_ref().ok_or(ServiceError::Unavailable("graph"))?;
        let ids = self
            .info
            .docs
            .as_ref()
            .map(|(_, ids)| ids.clone())
            .ok_or(ServiceError::Unavailable("document map"))?;
        let (degree, maxabs, dim, n_nodes) = (g.degree, g.maxabs, self.info.dim, g.matrix.params.n_cols);

        let t = Instant::now();
        let entries = match opts.entry {
            EntryMode::Routed => routed_entries(query, &self.info.centroids, &g.cluster_entries, opts.beam),
            EntryMode::Medoid => vec![g.medoid],
            EntryMode::Node(n) => vec![n],
        };
        let q = quantize_embedding(query, maxabs)?;
        trace.route_ms += ms(t.elapsed());

        let cfg = TraversalConfig {
            max_hops: opts.hops,
            beam: opts.beam,
            top_k: opts.top_k,
        };
        let outcome = traverse(&q, &entries, n_nodes, cfg, |batch: &[u32]| {
            batch
                .iter()
                .map(|&node| -> Result<NodeRecord, ServiceError> {
                    let bytes = self.fetch_column(Target::Node, node as usize, trace, Phase::Retrieval)?;
                    Ok(decode_node_record(&bytes, dim, degree)?)
                })
                .collect()
        })?;
        let qn = norm(query);
        Ok(outcome
            .results
            .into_iter()
            .map(|(node, s)| RankedResult {
                doc_id: ids[node as usize],
                score: Self::estimate(s, maxabs, qn),
                text: String::new(),
            })
            .collect())
    }

    fn tiptoe(&mut self, query: &[f32], k: usize, trace: &mut QueryTrace) -> Result<Vec<RankedResult>, ServiceError> {
        let maxabs = self.info.scoring.as_ref().ok_or(ServiceError::Unavailable("scoring"))?.maxabs;
        let t = Instant::now();
        let j = self.route(query)?;
        trace.route_ms += ms(t.elapsed());
        let scores = self.private_score(query, j, trace)?;
        let t = Instant::now();
        let by_id: HashMap<u64, i64> = scores.iter().copied().collect();
        let qn = norm(query);
        let out = select_topk_ids(&scores, k)
            .into_iter()
            .map(|id| RankedResult {
                doc_id: id,
                score: Self::estimate(by_id[&id], maxabs, qn),
                text: String::new(),
            })
            .collect();
        trace.rerank_ms += ms(t.elapsed());
        Ok(out)
    }
}

fn unexpected(m: Message) -> ServiceError {
    ServiceError::Protocol(format!("unexpected response type {:#04x}", m.to_frame().msg_type))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn route_identity_and_ties() {
        let c = vec![vec![1.0f32, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.6, 0.8]];
        assert_eq!(route_query(&[0.6, 0.8], &c).unwrap(), 3);
        let c2 = vec![vec![1.0f32, 0.0], vec![0.0, 1.0]];
        assert_eq!(route_query(&[1.0, 1.0], &c2).unwrap(), 0);
        assert!(matches!(
            route_query(&[1.0], &c2),
            Err(ServiceError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn route_matches_exhaustive_scan() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut rand_vec = |d: usize| -> Vec<f32> { (0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect() };
        let cents: Vec<Vec<f32>> = (0..20).map(|_| crate::vecmath::normalized(&rand_vec(8))).collect();
        for _ in 0..100 {
            let q = rand_vec(8);
            let sims: Vec<f64> = cents
                .iter()
                .map(|c| {
                    let d: f64 = c.iter().zip(&q).map(|(&a, &b)| a as f64 * b as f64).sum();
                    d / q.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt()
                })
                .collect();
            let mut best = 0;
            for j in 1..sims.len() {
                if sims[j] > sims[best] {
                    best = j;
                }
            }
            assert_eq!(route_query(&q, &cents).unwrap(), best);
        }
    }

    fn rec(id: u64, e: Vec<f32>) -> EmbeddingRecord {
        EmbeddingRecord {
            doc_id: id,
            embedding: e,
            text: format!("t{id}"),
        }
    }

    #[test]
    fn rerank_basics() {
        let docs = vec![rec(5, vec![0.0, 1.0]), rec(2, vec![1.0, 0.0]), rec(9, vec![1.0, 0.0])];
        let r = rerank_topk(&[1.0, 0.0], &docs, 10);
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].doc_id, 2);
        assert_eq!(r[1].doc_id, 9);
        assert!((r[0].score - 1.0).abs() < 1e-12);
        assert_eq!(rerank_topk(&[1.0, 0.0], &docs, 1).len(), 1);
    }

    #[test]
    fn rerank_matches_sort_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let docs: Vec<EmbeddingRecord> = (0..50)
            .map(|i| rec(i * 7 % 53, (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect()))
            .collect();
        let q: Vec<f32> = (0..6).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let got: Vec<u64> = rerank_topk(&q, &docs, 10).iter().map(|r| r.doc_id).collect();
        let mut all: Vec<(f64, u64)> = docs.iter().map(|d| (cosine(&q, &d.embedding), d.doc_id)).collect();
        all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let expect: Vec<u64> = all[..10].iter().map(|x| x.1).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn system_names() {
        for s in System::ALL {
            assert_eq!(s.label().parse::<System>().unwrap(), s);
        }
        assert!("hnsw".parse::<System>().is_err());
    }
}
