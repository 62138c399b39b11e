use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Per-query accounting. Byte counts are exact framed sizes. The `content_*`
/// fields are the share of the totals spent fetching document content after
/// retrieval.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub system: String,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub setup_bytes: u64,
    pub pir_op_count: u64,
    pub content_uplink_bytes: u64,
    pub content_downlink_bytes: u64,
    pub content_pir_ops: u64,
    pub route_ms: f64,
    pub encrypt_ms: f64,
    pub server_ms: f64,
    pub decode_ms: f64,
    pub rerank_ms: f64,
    /// Time spent in content fetches, also included in the phase times.
    pub content_ms: f64,
    /// Until ranked identifiers are known.
    pub retrieval_ms: f64,
    /// Until the results, with content when requested, are in hand.
    pub total_ms: f64,
    pub doc_ids: Vec<u64>,
}

pub(crate) fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl QueryTrace {
    pub fn new(system: &str, setup_bytes: u64) -> Self {
        Self {
            system: system.into(),
            setup_bytes,
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace is plain data")
    }
}

/// One ranked document. `score` is cosine similarity for locally re-ranked
/// results and the server-side estimate for the baselines; `text` is empty
/// when content was not fetched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub doc_id: u64,
    pub score: f64,
    pub text: String,
}
