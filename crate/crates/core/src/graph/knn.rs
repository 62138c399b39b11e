use rayon::prelude::*;

use super::GraphError;
use crate::vecmath::{dot, normalized};

/// Exact directed k-NN graph by cosine similarity.
///
/// Brute force over all pairs. Neighbor lists are ordered by descending
/// similarity with ties going to the smaller node id; a node is never its own
/// neighbor.
pub fn build_knn_graph(vectors: &[Vec<f32>], degree: usize) -> Result<Vec<Vec<u32>>, GraphError> {
    let n = vectors.len();
    if degree == 0 || degree >= n {
        return Err(GraphError::InvalidDegree { degree, n });
    }
    let unit: Vec<Vec<f32>> = vectors.iter().map(|v| normalized(v)).collect();
    Ok(unit
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let mut sims: Vec<(f64, u32)> = unit
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, w)| (dot(v, w), j as u32))
                .collect();
            let by_rank = |a: &(f64, u32), b: &(f64, u32)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
            sims.select_nth_unstable_by(degree - 1, by_rank);
            sims.truncate(degree);
            sims.sort_by(by_rank);
            sims.into_iter().map(|(_, j)| j).collect()
        })
        .collect())
}

/// Node maximizing the summed cosine to every node (ties to the smaller id).
pub fn medoid(vectors: &[Vec<f32>], members: &[usize]) -> Option<usize> {
    let first = *members.first()?;
    let d = vectors[first].len();
    let unit: Vec<Vec<f32>> = members.iter().map(|&i| normalized(&vectors[i])).collect();
    let mut total = vec![0f32; d];
    for u in &unit {
        for (t, &x) in total.iter_mut().zip(u) {
            *t += x;
        }
    }
    let mut best = (f64::NEG_INFINITY, first);
    for (u, &i) in unit.iter().zip(members) {
        let s = dot(u, &total);
        if s > best.0 {
            best = (s, i);
        }
    }
    Some(best.1)
}
