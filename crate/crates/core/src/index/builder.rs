use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::kmeans::{default_cluster_count, kmeans_fit, ClusterModel, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use super::matrices::{build_chunk_matrix, build_doc_matrix, ChunkMatrix, DocMatrix};
use super::packing::{chunks_for, framed_len, pack_cluster_bytes};
use super::{EmbeddingRecord, IndexError};
use crate::graph::{GraphSection, DEFAULT_DEGREE};
use crate::lwe::{derive_fetch_params, AnyHint, LweParams, ServedMatrix, DEFAULT_LWE_DIM};
use crate::scoring::ScoringSection;

#[derive(Debug, Clone, PartialEq)]
pub struct IndexConfig {
    /// Cluster count; `None` means `round(sqrt(N))`.
    pub k: Option<usize>,
    pub chunk_size: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub kmeans_seed: u64,
    pub lwe_dim: usize,
    /// Master seed for the public matrices; `None` draws a fresh one.
    pub matrix_seed: Option<[u8; 32]>,
    /// Per-document content matrix, needed by the baselines' content fetches.
    pub with_docs: bool,
    pub with_graph: bool,
    pub graph_degree: usize,
    pub with_scoring: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            k: None,
            chunk_size: 256,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            kmeans_seed: 0,
            lwe_dim: DEFAULT_LWE_DIM,
            matrix_seed: None,
            with_docs: true,
            with_graph: false,
            graph_degree: DEFAULT_DEGREE,
            with_scoring: false,
        }
    }
}

impl IndexConfig {
    /// Makes the build reproducible: k-means and every public matrix are
    /// derived from `seed`.
    pub fn seeded(self, seed: u64) -> Self {
        let mut master = [0u8; 32];
        ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut master);
        Self {
            kmeans_seed: seed,
            matrix_seed: Some(master),
            ..self
        }
    }
}

/// The cluster matrix as served: one cluster per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSection {
    pub params: LweParams,
    pub chunks: ChunkMatrix,
    pub hint: AnyHint,
}

impl ClusterSection {
    pub fn served(&self) -> Result<ServedMatrix<'_, u8>, IndexError> {
        Ok(ServedMatrix::new(&self.params, &self.chunks.matrix)?)
    }
}

/// The per-document content matrix as served: one document per column, in
/// corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocSection {
    pub params: LweParams,
    pub docs: DocMatrix,
    pub hint: AnyHint,
}

impl DocSection {
    pub fn served(&self) -> Result<ServedMatrix<'_, u8>, IndexError> {
        Ok(ServedMatrix::new(&self.params, &self.docs.matrix)?)
    }
}

/// Wall-clock time spent in each build phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildTimings {
    pub kmeans: Duration,
    pub clusters: Duration,
    pub docs: Duration,
    pub graph: Duration,
    pub scoring: Duration,
}

/// A complete server-side index. Document positions (corpus order) are the
/// node ids of the graph and the columns of the content matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PirIndex {
    pub dim: usize,
    pub doc_ids: Vec<u64>,
    pub model: ClusterModel,
    pub cluster: ClusterSection,
    pub docs: Option<DocSection>,
    pub graph: Option<GraphSection>,
    pub scoring: Option<ScoringSection>,
}

const CLUSTER_STREAM: u64 = 0;
const DOC_STREAM: u64 = 1;
const GRAPH_STREAM: u64 = 2;
const SCORING_STREAM: u64 = 3;

fn section_seed(master: &[u8; 32], stream: u64) -> [u8; 32] {
    let mut rng = ChaCha20Rng::from_seed(*master);
    rng.set_stream(stream);
    let mut out = [0u8; 32];
    rng.fill_bytes(&mut out);
    out
}

impl PirIndex {
    pub fn build(records: &[EmbeddingRecord], cfg: &IndexConfig) -> Result<Self, IndexError> {
        Self::build_timed(records, cfg).map(|(index, _)| index)
    }

    pub fn build_timed(
        records: &[EmbeddingRecord],
        cfg: &IndexConfig,
    ) -> Result<(Self, BuildTimings), IndexError> {
        if records.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        if cfg.chunk_size == 0 {
            return Err(IndexError::Inconsistent("chunk_size must be at least 1".into()));
        }
        let master = cfg.matrix_seed.unwrap_or_else(|| {
            let mut s = [0u8; 32];
            rand::rng().fill_bytes(&mut s);
            s
        });
        let mut timings = BuildTimings::default();

        let t = Instant::now();
        let vectors: Vec<Vec<f32>> = records.iter().map(|r| r.embedding.clone()).collect();
        let k = cfg.k.unwrap_or_else(|| default_cluster_count(records.len()));
        let model = kmeans_fit(&vectors, k, cfg.max_iters, cfg.tol, cfg.kmeans_seed)?;
        timings.kmeans = t.elapsed();

        let t = Instant::now();
        let members = model.members();
        let target_chunks = members
            .iter()
            .map(|m| chunks_for(framed_len(m.iter().map(|&i| &records[i])), cfg.chunk_size))
            .max()
            .unwrap_or(1);
        let streams = members
            .iter()
            .map(|m| pack_cluster_bytes(m.iter().map(|&i| &records[i]), cfg.chunk_size, target_chunks))
            .collect::<Result<Vec<_>, _>>()?;
        let chunks = build_chunk_matrix(&streams, cfg.chunk_size)?;
        let params = derive_fetch_params(chunks.n_cols(), Some(section_seed(&master, CLUSTER_STREAM)))?
            .with_lwe_dim(cfg.lwe_dim);
        let hint = ServedMatrix::new(&params, &chunks.matrix)?.compute_hint()?;
        let cluster = ClusterSection { params, chunks, hint };
        timings.clusters = t.elapsed();

        let docs = if cfg.with_docs {
            let t = Instant::now();
            let docs = build_doc_matrix(records, cfg.chunk_size)?;
            let params = derive_fetch_params(docs.matrix.cols(), Some(section_seed(&master, DOC_STREAM)))?
                .with_lwe_dim(cfg.lwe_dim);
            let hint = ServedMatrix::new(&params, &docs.matrix)?.compute_hint()?;
            timings.docs = t.elapsed();
            Some(DocSection { params, docs, hint })
        } else {
            None
        };

        let graph = if cfg.with_graph {
            let t = Instant::now();
            let g = GraphSection::build(
                records,
                &model,
                cfg.graph_degree,
                section_seed(&master, GRAPH_STREAM),
                Some(cfg.lwe_dim),
            )?;
            timings.graph = t.elapsed();
            Some(g)
        } else {
            None
        };

        let scoring = if cfg.with_scoring {
            let t = Instant::now();
            let s = ScoringSection::build(
                &model,
                records,
                section_seed(&master, SCORING_STREAM),
                Some(cfg.lwe_dim),
            )?;
            timings.scoring = t.elapsed();
            Some(s)
        } else {
            None
        };

        let index = Self {
            dim: vectors[0].len(),
            doc_ids: records.iter().map(|r| r.doc_id).collect(),
            model,
            cluster,
            docs,
            graph,
            scoring,
        };
        Ok((index, timings))
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Checks the cross-section invariants a loaded file must satisfy.
    pub fn validate(&self) -> Result<(), IndexError> {
        let bad = |m: String| Err(IndexError::Corrupt(m));
        let n = self.n_docs();
        let k = self.k();
        if n == 0 || k == 0 || k > n {
            return bad(format!("{k} clusters over {n} documents"));
        }
        if self.model.assignments.len() != n {
            return bad("assignment count differs from document count".into());
        }
        if self.model.assignments.iter().any(|&a| a as usize >= k) {
            return bad("assignment out of range".into());
        }
        if self.model.centroids.iter().any(|c| c.len() != self.dim) {
            return bad("centroid dimension differs from index dimension".into());
        }
        check_served(&self.cluster.params, self.cluster.chunks.matrix.rows(), self.cluster.chunks.n_cols(), &self.cluster.hint)?;
        if self.cluster.chunks.n_cols() != k {
            return bad("cluster matrix width differs from k".into());
        }
        if self.cluster.chunks.chunk_size == 0 || !self.cluster.chunks.m_rows().is_multiple_of(self.cluster.chunks.chunk_size) {
            return bad("cluster matrix rows are not whole chunks".into());
        }
        if let Some(d) = &self.docs {
            check_served(&d.params, d.docs.matrix.rows(), d.docs.matrix.cols(), &d.hint)?;
            if d.docs.doc_ids != self.doc_ids {
                return bad("content matrix order differs from corpus order".into());
            }
        }
        if let Some(g) = &self.graph {
            check_served(&g.params, g.nodes.rows(), g.nodes.cols(), &g.hint)?;
            if g.n_nodes() != n || g.cluster_entries.len() != k {
                return bad("graph does not match the corpus".into());
            }
            if g.record_len() != crate::graph::record_len(self.dim, g.degree) {
                return bad("node record length does not match degree".into());
            }
            if g.medoid as usize >= n || g.cluster_entries.iter().any(|&e| e as usize >= n) {
                return bad("graph entry point out of range".into());
            }
        }
        if let Some(s) = &self.scoring {
            if s.k() != k || s.hints.len() != k || s.matrices.row_doc_ids.len() != k {
                return bad("scoring section does not have one matrix per cluster".into());
            }
            for ((m, h), ids) in s.matrices.matrices.iter().zip(&s.hints).zip(&s.matrices.row_doc_ids) {
                check_served(&s.params, m.rows(), m.cols(), h)?;
                if m.rows() != s.matrices.capacity || m.cols() != self.dim || ids.len() > m.rows() {
                    return bad("score matrix shape".into());
                }
            }
        }
        Ok(())
    }
}

fn check_served(params: &LweParams, rows: usize, cols: usize, hint: &AnyHint) -> Result<(), IndexError> {
    if params.n_cols != cols {
        return Err(IndexError::Corrupt(format!(
            "params declare {} columns, matrix has {cols}",
            params.n_cols
        )));
    }
    if hint.rows() != rows || hint.cols() != params.lwe_dim {
        return Err(IndexError::Corrupt(format!(
            "hint is {}x{}, expected {rows}x{}",
            hint.rows(),
            hint.cols(),
            params.lwe_dim
        )));
    }
    if hint.width() != params.profile.residue_bytes() {
        return Err(IndexError::Corrupt("hint residue width differs from profile".into()));
    }
    Ok(())
}
