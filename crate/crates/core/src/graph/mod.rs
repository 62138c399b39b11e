//! Graph-traversal retrieval over a k-NN graph whose node records are
//! fetched one by one with the column PIR primitive.

mod knn;
mod records;
mod traversal;

use thiserror::Error;

pub use knn::{build_knn_graph, medoid};
pub use records::{decode_node_record, encode_node_record, encode_node_records, record_len, NodeRecord};
pub use traversal::{routed_entries, traverse, TraversalConfig, TraversalOutcome, TraversalState};

use crate::index::{ClusterModel, EmbeddingRecord};
use crate::lwe::{derive_fetch_params, AnyHint, LweError, LweParams, PlainMatrix, ServedMatrix};
use crate::scoring::{corpus_maxabs, quantize_embedding, ScoringError};

pub const DEFAULT_DEGREE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("degree {degree} is invalid for {n} nodes (need 1 <= degree < n)")]
    InvalidDegree { degree: usize, n: usize },
    #[error("entry point {node} is not a node (graph has {n_nodes})")]
    InvalidEntryPoint { node: u32, n_nodes: usize },
    #[error("invalid graph configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed node record: {0}")]
    MalformedRecord(String),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Lwe(#[from] LweError),
}

/// The served node matrix plus the public metadata a client needs to walk
/// it: quantization scale, degree and entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSection {
    pub degree: usize,
    pub maxabs: f32,
    /// Corpus medoid.
    pub medoid: u32,
    /// Medoid of each cluster, indexed like the routing centroids.
    pub cluster_entries: Vec<u32>,
    pub params: LweParams,
    pub nodes: PlainMatrix<u8>,
    pub hint: AnyHint,
}

impl GraphSection {
    /// Nodes are corpus positions.
    pub fn build(
        records: &[EmbeddingRecord],
        model: &ClusterModel,
        degree: usize,
        seed: [u8; 32],
        lwe_dim: Option<usize>,
    ) -> Result<Self, GraphError> {
        let vectors: Vec<Vec<f32>> = records.iter().map(|r| r.embedding.clone()).collect();
        let maxabs = corpus_maxabs(vectors.iter().map(Vec::as_slice));
        let quantized = vectors
            .iter()
            .map(|v| quantize_embedding(v, maxabs))
            .collect::<Result<Vec<_>, _>>()?;
        let graph = build_knn_graph(&vectors, degree)?;
        let nodes = encode_node_records(&graph, &quantized, degree)?;

        let all: Vec<usize> = (0..vectors.len()).collect();
        let corpus_medoid = medoid(&vectors, &all).unwrap_or(0) as u32;
        let cluster_entries = model
            .members()
            .iter()
            .map(|m| medoid(&vectors, m).map_or(corpus_medoid, |i| i as u32))
            .collect();

        let mut params = derive_fetch_params(nodes.cols(), Some(seed))?;
        if let Some(n) = lwe_dim {
            params = params.with_lwe_dim(n);
        }
        let hint = ServedMatrix::new(&params, &nodes)?.compute_hint()?;
        Ok(Self {
            degree,
            maxabs,
            medoid: corpus_medoid,
            cluster_entries,
            params,
            nodes,
            hint,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.cols()
    }

    pub fn record_len(&self) -> usize {
        self.nodes.rows()
    }

    pub fn served(&self) -> Result<ServedMatrix<'_, u8>, GraphError> {
        Ok(ServedMatrix::new(&self.params, &self.nodes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lwe::ColumnClient;

    #[test]
    fn private_fetch_of_a_node_record() {
        let records: Vec<EmbeddingRecord> = (0..12)
            .map(|i| EmbeddingRecord {
                doc_id: 100 + i,
                embedding: vec![(i as f32).cos(), (i as f32).sin(), 0.5],
                text: format!("doc {i}"),
            })
            .collect();
        let model = ClusterModel {
            centroids: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
            assignments: (0..12).map(|i| (i % 2) as u32).collect(),
            objective_history: vec![],
        };
        let g = GraphSection::build(&records, &model, 3, [4; 32], Some(32)).unwrap();
        assert_eq!(g.record_len(), record_len(3, 3));
        assert_eq!(g.cluster_entries.len(), 2);
        let client = ColumnClient::new(g.params.clone(), g.hint.clone()).unwrap();
        let (key, q) = client.encrypt_selector(5, [1; 32], [2; 32]).unwrap();
        let ans = g.served().unwrap().answer(&q).unwrap();
        let bytes: Vec<u8> = client.decode(&key, ans).unwrap().into_iter().map(|x| x as u8).collect();
        assert_eq!(bytes, g.nodes.column(5));
        assert_eq!(decode_node_record(&bytes, 3, 3).unwrap().node_id, 5);
    }
}
