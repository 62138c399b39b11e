use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::EvalError;
use crate::index::EmbeddingRecord;
use crate::vecmath::normalized;

const WORDS: [&str; 16] = [
    "alpha", "beta", "gamma", "delta", "river", "stone", "cloud", "ember", "quartz", "meadow", "signal",
    "harbor", "lantern", "orbit", "cedar", "violet",
];

/// Deterministic filler text of exactly `len` ASCII bytes, keyed by `doc_id`.
pub fn filler_text(doc_id: u64, len: usize) -> String {
    let mut rng = ChaCha20Rng::seed_from_u64(doc_id);
    let mut s = format!("doc {doc_id}:");
    while s.len() < len {
        s.push(' ');
        s.push_str(WORDS[rng.random_range(0..WORDS.len())]);
    }
    s.truncate(len);
    s
}

/// A labelled Gaussian mixture sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<EmbeddingRecord>,
    /// Generating blob of each record.
    pub labels: Vec<usize>,
}

/// Samples `n_docs` documents around the given centers: each picks a center
/// uniformly, adds per-coordinate Gaussian noise of std `blob_std` and is
/// L2-normalized. Document ids are `0..n_docs`.
pub fn gen_mixture(
    centers: &[Vec<f32>],
    n_docs: usize,
    blob_std: f64,
    text_len: usize,
    rng_seed: u64,
) -> Result<SyntheticCorpus, EvalError> {
    if centers.is_empty() || centers.len() > n_docs {
        return Err(EvalError::InvalidConfig(format!(
            "need 1 <= n_blobs <= n_docs, got {} blobs for {n_docs} docs",
            centers.len()
        )));
    }
    if !(blob_std.is_finite() && blob_std >= 0.0) {
        return Err(EvalError::InvalidConfig(format!("blob_std {blob_std}")));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|c| c.len() != d) {
        return Err(EvalError::InvalidConfig("centers must share a positive dimension".into()));
    }
    let noise = Normal::new(0.0, blob_std).map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut records = Vec::with_capacity(n_docs);
    let mut labels = Vec::with_capacity(n_docs);
    for id in 0..n_docs as u64 {
        let b = rng.random_range(0..centers.len());
        let v: Vec<f32> = centers[b]
            .iter()
            .map(|&c| (c as f64 + noise.sample(&mut rng)) as f32)
            .collect();
        records.push(EmbeddingRecord {
            doc_id: id,
            embedding: normalized(&v),
            text: filler_text(id, text_len),
        });
        labels.push(b);
    }
    Ok(SyntheticCorpus { records, labels })
}

/// Unit-norm random blob centers followed by [`gen_mixture`].
pub fn gen_labeled_corpus(
    n_docs: usize,
    d: usize,
    n_blobs: usize,
    blob_std: f64,
    text_len: usize,
    rng_seed: u64,
) -> Result<SyntheticCorpus, EvalError> {
    if d == 0 {
        return Err(EvalError::InvalidConfig("dimension must be positive".into()));
    }
    if n_blobs == 0 || n_blobs > n_docs {
        return Err(EvalError::InvalidConfig(format!(
            "need 1 <= n_blobs <= n_docs, got {n_blobs} blobs for {n_docs} docs"
        )));
    }
    // Centers and documents use separate streams so the center set does not
    // depend on n_docs.
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let centers: Vec<Vec<f32>> = (0..n_blobs)
        .map(|_| {
            let v: Vec<f32> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect();
            normalized(&v)
        })
        .collect();
    gen_mixture(&centers, n_docs, blob_std, text_len, rng_seed.wrapping_add(1))
}

pub fn gen_synthetic_corpus(
    n_docs: usize,
    d: usize,
    n_blobs: usize,
    blob_std: f64,
    text_len: usize,
    rng_seed: u64,
) -> Result<Vec<EmbeddingRecord>, EvalError> {
    gen_labeled_corpus(n_docs, d, n_blobs, blob_std, text_len, rng_seed).map(|c| c.records)
}

/// Queries that are perturbed copies of uniformly chosen corpus embeddings.
pub fn gen_queries(
    corpus: &[EmbeddingRecord],
    n_queries: usize,
    noise_std: f64,
    rng_seed: u64,
) -> Result<Vec<Vec<f32>>, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::InvalidConfig("cannot draw queries from an empty corpus".into()));
    }
    let noise = Normal::new(0.0, noise_std).map_err(|e| EvalError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    Ok((0..n_queries)
        .map(|_| {
            let base = &corpus[rng.random_range(0..corpus.len())].embedding;
            let v: Vec<f32> = base
                .iter()
                .map(|&x| (x as f64 + noise.sample(&mut rng)) as f32)
                .collect();
            normalized(&v)
        })
        .collect())
}
