//! Offline phase: corpus ingestion, clustering, cluster packing, the served
//! matrices and their persistence.

mod builder;
mod corpus;
mod file;
mod kmeans;
mod matrices;
mod packing;

use thiserror::Error;

pub use builder::{BuildTimings, ClusterSection, DocSection, IndexConfig, PirIndex};
pub use corpus::{load_corpus, parse_corpus, write_corpus, EmbeddingRecord};
pub use file::{load_index, save_index, INDEX_MAGIC, INDEX_VERSION};
pub use kmeans::{default_cluster_count, kmeans_fit, ClusterModel, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use matrices::{build_chunk_matrix, build_doc_matrix, ChunkMatrix, DocMatrix};
pub use packing::{chunks_for, framed_doc_len, framed_len, pack_cluster_bytes, unpack_cluster, FramingError};

use crate::graph::GraphError;
use crate::lwe::LweError;
use crate::scoring::ScoringError;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: embedding has dimension {found}, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate document id {id}")]
    DuplicateId { line: usize, id: u64 },
    #[error("invalid cluster count {k} for {n} documents")]
    InvalidK { k: usize, n: usize },
    #[error("input vectors contain a non-finite value")]
    NonFinite,
    #[error("cluster needs {needed} bytes but capacity is {capacity}")]
    ClusterOverflow { needed: usize, capacity: usize },
    #[error("stream {stream} has {found} bytes, expected {expected}")]
    UnequalStreamLengths {
        expected: usize,
        found: usize,
        stream: usize,
    },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("inconsistent index: {0}")]
    Inconsistent(String),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("index format version {0} is not supported")]
    VersionUnsupported(u16),
    #[error("index file is truncated")]
    TruncatedFile,
    #[error("index file is corrupt: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Lwe(#[from] LweError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
