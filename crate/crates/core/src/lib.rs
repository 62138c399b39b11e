//! Private document retrieval by cluster-and-fetch PIR, with a graph
//! traversal baseline and a homomorphic scoring baseline.

pub mod codec;
pub mod eval;
pub mod graph;
pub mod index;
pub mod lwe;
pub mod scoring;
pub mod service;
pub mod vecmath;

pub use eval::{run_benchmark, BenchConfig, BenchReport, BenchRow, EvalError};
pub use index::{load_corpus, load_index, save_index, EmbeddingRecord, IndexConfig, IndexError, PirIndex};
pub use lwe::{LweError, LweParams, Profile};
pub use service::{
    Client, EntryMode, InProcess, PirServer, QueryTrace, RankedResult, SearchOptions, ServiceError, System,
    TcpTransport,
};
