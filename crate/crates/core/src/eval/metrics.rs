use std::collections::HashSet;

use rayon::prelude::*;

use crate::index::EmbeddingRecord;
use crate::vecmath::cosine;

/// Exhaustive cosine scan: the top `r` ids, descending, ties to the smaller id.
pub fn exact_topk_oracle(query: &[f32], corpus: &[EmbeddingRecord], r: usize) -> Vec<u64> {
    let mut scored: Vec<(f64, u64)> = corpus
        .par_iter()
        .map(|d| (cosine(query, &d.embedding), d.doc_id))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(r).map(|(_, id)| id).collect()
}

/// Binary-relevance NDCG over the first `k` ranks. Zero when nothing is
/// relevant.
pub fn ndcg_at_k(ranked: &[u64], relevant: &HashSet<u64>, k: usize) -> f64 {
    let gain = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| relevant.contains(id))
        .map(|(i, _)| gain(i))
        .sum();
    let idcg: f64 = (0..relevant.len().min(k)).map(gain).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// `(hits / k, hits / |relevant|)` over the first `k` ranks; recall is zero
/// when nothing is relevant.
pub fn precision_recall_at_k(ranked: &[u64], relevant: &HashSet<u64>, k: usize) -> (f64, f64) {
    let hits = ranked.iter().take(k).filter(|id| relevant.contains(id)).count() as f64;
    let recall = if relevant.is_empty() {
        0.0
    } else {
        hits / relevant.len() as f64
    };
    (hits / k as f64, recall)
}

/// Least-squares `y = a + b x`; returns `(a, b, r_squared)`. R² is 1 when
/// `y` is constant and fitted exactly.
pub fn affine_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let a = my - b * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    (a, b, r2)
}

/// Mean, median and 95th percentile (nearest rank). Zeros for no samples.
pub fn summarize(samples: &[f64]) -> (f64, f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = |p: f64| s[((p * s.len() as f64).ceil() as usize).clamp(1, s.len()) - 1];
    (s.iter().sum::<f64>() / s.len() as f64, rank(0.5), rank(0.95))
}
