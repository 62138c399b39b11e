use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::IndexError;
use crate::vecmath::{normalized, sq_dist};

pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Public routing metadata: centroids plus the cluster of every document.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// `k` centroids of dimension `d`, as fitted (not normalized).
    pub centroids: Vec<Vec<f32>>,
    /// Cluster index per input vector, in input order.
    pub assignments: Vec<u32>,
    /// Sum of squared distances after every assignment step.
    pub objective_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// L2-normalized centroids, the ones published for cosine routing.
    pub fn routing_centroids(&self) -> Vec<Vec<f32>> {
        self.centroids.iter().map(|c| normalized(c)).collect()
    }

    /// Input positions grouped by cluster, ascending within each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c as usize].push(i);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }
}

/// Default cluster count: `round(sqrt(n))`, at least 1.
pub fn default_cluster_count(n_docs: usize) -> usize {
    ((n_docs as f64).sqrt().round() as usize).max(1)
}

fn nearest(v: &[f32], centroids: &[Vec<f32>]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (j as u32, d);
        }
    }
    best
}

fn kmeans_pp_init(vectors: &[Vec<f32>], k: usize, rng: &mut ChaCha20Rng) -> Vec<Vec<f32>> {
    let n = vectors.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![vectors[first].clone()];
    let mut dist: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();

    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` a hair below `target`.
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // Every point coincides with a centroid: fall back to uniform
            // among the unchosen.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        let c = vectors[pick].clone();
        for (d, v) in dist.iter_mut().zip(vectors) {
            *d = d.min(sq_dist(v, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Assigns every vector to its nearest centroid (ties to the smaller index),
/// then reseeds each empty cluster with the point farthest from its centroid.
/// Returns assignments and the objective.
fn assign(vectors: &[Vec<f32>], centroids: &mut [Vec<f32>]) -> (Vec<u32>, f64) {
    let k = centroids.len();
    let (mut assignments, mut dists): (Vec<u32>, Vec<f64>) = vectors
        .par_iter()
        .map(|v| nearest(v, centroids))
        .unzip();

    let mut sizes = vec![0usize; k];
    for &a in &assignments {
        sizes[a as usize] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        // Farthest point whose removal does not empty its own cluster.
        let donor = (0..vectors.len())
            .filter(|&i| sizes[assignments[i] as usize] > 1)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
        let Some(p) = donor else { break };
        sizes[assignments[p] as usize] -= 1;
        sizes[empty] = 1;
        assignments[p] = empty as u32;
        dists[p] = 0.0;
        centroids[empty] = vectors[p].clone();
    }
    let objective = dists.iter().sum();
    (assignments, objective)
}

fn update(vectors: &[Vec<f32>], assignments: &[u32], previous: &[Vec<f32>]) -> Vec<Vec<f32>> {
    let k = previous.len();
    let d = previous[0].len();
    let mut sums = vec![vec![0f64; d]; k];
    let mut counts = vec![0usize; k];
    for (v, &a) in vectors.iter().zip(assignments) {
        counts[a as usize] += 1;
        for (s, &x) in sums[a as usize].iter_mut().zip(v) {
            *s += x as f64;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| {
            if c == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|x| (x / c as f64) as f32).collect()
            }
        })
        .collect()
}

/// Lloyd's k-means with k-means++ seeding.
///
/// Iterates until the largest centroid shift falls below `tol` or
/// `max_iters` update steps have run. The returned assignments are the
/// nearest-centroid assignments for the returned centroids, and no cluster is
/// empty. Deterministic in `rng_seed`.
pub fn kmeans_fit(
    vectors: &[Vec<f32>],
    k: usize,
    max_iters: usize,
    tol: f64,
    rng_seed: u64,
) -> Result<ClusterModel, IndexError> {
    let n = vectors.len();
    if k == 0 || k > n {
        return Err(IndexError::InvalidK { k, n });
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().position(|v| v.len() != d) {
        return Err(IndexError::DimensionMismatch {
            line: bad + 1,
            expected: d,
            found: vectors[bad].len(),
        });
    }
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(IndexError::NonFinite);
    }

    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut centroids = kmeans_pp_init(vectors, k, &mut rng);
    let mut history = Vec::new();
    let mut iters = 0;
    loop {
        let (assignments, objective) = assign(vectors, &mut centroids);
        history.push(objective);
        if iters == max_iters {
            return Ok(ClusterModel {
                centroids,
                assignments,
                objective_history: history,
            });
        }
        let next = update(vectors, &assignments, &centroids);
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        iters += 1;
        if shift < tol {
            let (assignments, objective) = assign(vectors, &mut centroids);
            history.push(objective);
            return Ok(ClusterModel {
                centroids,
                assignments,
                objective_history: history,
            });
        }
    }
}
