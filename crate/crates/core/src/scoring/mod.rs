//! Private homomorphic scoring within one publicly named cluster.
//!
//! Each cluster's documents are stored as rows of quantized embeddings, padded
//! with zero rows to the largest cluster. The client encrypts its quantized
//! query under the scoring profile; the server returns one encrypted inner
//! product per row. Scores are exact integers, but only identifiers come back,
//! so content needs separate fetches.

mod quantize;

use thiserror::Error;

pub use quantize::{
    corpus_maxabs, decode_centered, dequantize, encode_mod_p, quantize_embedding, quantized_dot,
    QUANT_SCALE,
};

use crate::index::{ClusterModel, EmbeddingRecord};
use crate::lwe::{derive_params, AnyHint, LweError, LweParams, PlainMatrix, Profile, ServedMatrix};

/// Plaintext modulus of the scoring profile.
pub const SCORING_PLAIN_MOD: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("quantization scale must be positive and finite, got {0}")]
    InvalidScale(f32),
    #[error("embedding contains a non-finite value")]
    NonFiniteInput,
    #[error("cluster {cluster} does not exist (k = {k})")]
    UnknownCluster { cluster: usize, k: usize },
    #[error("decoded {found} scores, expected {expected}")]
    DecodeSizeMismatch { expected: usize, found: usize },
    #[error("embedding has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Lwe(#[from] LweError),
}

/// Per-cluster score matrices (`capacity x d`, signed 8-bit) and the public
/// row-to-document maps. Rows past a cluster's fill are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingMatrices {
    pub capacity: usize,
    pub matrices: Vec<PlainMatrix<i8>>,
    pub row_doc_ids: Vec<Vec<u64>>,
}

pub fn build_embedding_matrices(
    model: &ClusterModel,
    records: &[EmbeddingRecord],
    maxabs: f32,
) -> Result<EmbeddingMatrices, ScoringError> {
    let d = model.dim();
    let members = model.members();
    let capacity = members.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let mut matrices = Vec::with_capacity(members.len());
    let mut row_doc_ids = Vec::with_capacity(members.len());
    for rows in &members {
        let mut m = PlainMatrix::<i8>::zeros(capacity, d);
        let mut ids = Vec::with_capacity(rows.len());
        for (r, &i) in rows.iter().enumerate() {
            let rec = &records[i];
            if rec.embedding.len() != d {
                return Err(ScoringError::DimensionMismatch {
                    expected: d,
                    found: rec.embedding.len(),
                });
            }
            for (c, q) in quantize_embedding(&rec.embedding, maxabs)?.into_iter().enumerate() {
                m.set(r, c, q);
            }
            ids.push(rec.doc_id);
        }
        matrices.push(m);
        row_doc_ids.push(ids);
    }
    Ok(EmbeddingMatrices {
        capacity,
        matrices,
        row_doc_ids,
    })
}

/// Everything the server holds for scoring, plus the public quantization
/// scale and the hints shipped at setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringSection {
    pub maxabs: f32,
    pub params: LweParams,
    pub matrices: EmbeddingMatrices,
    pub hints: Vec<AnyHint>,
}

impl ScoringSection {
    /// Quantizes the corpus and precomputes one hint per cluster. All
    /// clusters share one public matrix since every score matrix has `d`
    /// columns.
    pub fn build(
        model: &ClusterModel,
        records: &[EmbeddingRecord],
        seed: [u8; 32],
        lwe_dim: Option<usize>,
    ) -> Result<Self, ScoringError> {
        let maxabs = corpus_maxabs(records.iter().map(|r| r.embedding.as_slice()));
        let matrices = build_embedding_matrices(model, records, maxabs)?;
        let mut params = derive_params(model.dim(), SCORING_PLAIN_MOD, Profile::Scoring, Some(seed))?;
        if let Some(n) = lwe_dim {
            params = params.with_lwe_dim(n);
        }
        let hints = matrices
            .matrices
            .iter()
            .map(|m| ServedMatrix::new(&params, m)?.compute_hint())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            maxabs,
            params,
            matrices,
            hints,
        })
    }

    pub fn k(&self) -> usize {
        self.matrices.matrices.len()
    }

    pub fn served(&self, cluster: usize) -> Result<ServedMatrix<'_, i8>, ScoringError> {
        let m = self
            .matrices
            .matrices
            .get(cluster)
            .ok_or(ScoringError::UnknownCluster {
                cluster,
                k: self.k(),
            })?;
        Ok(ServedMatrix::new(&self.params, m)?)
    }
}

/// Maps decoded residues to `(doc_id, score)`, dropping padding rows.
pub fn scores_for_rows(
    decoded: &[u64],
    row_doc_ids: &[u64],
    capacity: usize,
    plain_mod: u64,
) -> Result<Vec<(u64, i64)>, ScoringError> {
    if decoded.len() != capacity {
        return Err(ScoringError::DecodeSizeMismatch {
            expected: capacity,
            found: decoded.len(),
        });
    }
    Ok(row_doc_ids
        .iter()
        .zip(decoded)
        .map(|(&id, &x)| (id, decode_centered(x, plain_mod)))
        .collect())
}

/// Top-`k` ids by descending score, ties to the smaller id.
pub fn select_topk_ids(scores: &[(u64, i64)], k: usize) -> Vec<u64> {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    s.into_iter().take(k).map(|(id, _)| id).collect()
}
