//! Synthetic corpora, the exhaustive-search oracle, IR metrics and the
//! benchmark sweep across all three systems.

mod bench;
mod metrics;
mod synth;

use thiserror::Error;

pub use bench::{run_benchmark, BenchConfig, BenchReport, BenchRow, ScalingFit, SizeSummary};
pub use metrics::{affine_fit, exact_topk_oracle, ndcg_at_k, precision_recall_at_k, summarize};
pub use synth::{filler_text, gen_labeled_corpus, gen_mixture, gen_queries, gen_synthetic_corpus, SyntheticCorpus};

use crate::index::IndexError;
use crate::service::ServiceError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("operation accounting mismatch: {0}")]
    Accounting(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Service(#[from] ServiceError),
}
