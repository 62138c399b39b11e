use std::collections::{HashMap, HashSet};

use super::{GraphError, NodeRecord};
use crate::scoring::quantized_dot;
use crate::vecmath::cosine;

/// Search shape. The number of fetches is always `max_hops * beam`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraversalConfig {
    pub max_hops: usize,
    pub beam: usize,
    pub top_k: usize,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        Self {
            max_hops: 4,
            beam: 8,
            top_k: 10,
        }
    }
}

/// Traversal bookkeeping between hops.
#[derive(Debug, Clone, Default)]
pub struct TraversalState {
    /// Nodes to fetch next, best first.
    pub frontier: Vec<u32>,
    /// Nodes whose records have been fetched.
    pub visited: HashSet<u32>,
    pub hop: usize,
    /// Every node scored so far, from its own record or a neighbor's.
    pub scored: HashMap<u32, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalOutcome {
    /// Best `(node, score)` pairs, descending score, ties to the smaller node.
    pub results: Vec<(u32, i64)>,
    /// Every node id requested, in order, including dummy re-fetches.
    pub fetch_sequence: Vec<u32>,
}

fn rank(a: &(u32, i64), b: &(u32, i64)) -> std::cmp::Ordering {
    b.1.cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Greedy beam search over a k-NN graph whose records are fetched through
/// `fetch`.
///
/// Each hop hands `fetch` exactly `beam` node ids; when the frontier holds
/// fewer, the batch is filled by re-requesting an already known node. Records
/// must come back in request order. Fetched nodes and all of their neighbors
/// are scored against `query` with quantized inner products.
pub fn traverse<F, E>(
    query: &[i8],
    entries: &[u32],
    n_nodes: usize,
    cfg: TraversalConfig,
    mut fetch: F,
) -> Result<TraversalOutcome, E>
where
    F: FnMut(&[u32]) -> Result<Vec<NodeRecord>, E>,
    E: From<GraphError>,
{
    if cfg.beam == 0 || cfg.max_hops == 0 {
        return Err(GraphError::InvalidConfig(format!(
            "beam {} and max_hops {} must both be at least 1",
            cfg.beam, cfg.max_hops
        ))
        .into());
    }
    let Some(&first) = entries.first() else {
        return Err(GraphError::InvalidConfig("no entry point".into()).into());
    };
    if let Some(&bad) = entries.iter().find(|&&e| e as usize >= n_nodes) {
        return Err(GraphError::InvalidEntryPoint { node: bad, n_nodes }.into());
    }

    let mut state = TraversalState::default();
    for &e in entries {
        if !state.frontier.contains(&e) && state.frontier.len() < cfg.beam {
            state.frontier.push(e);
        }
    }
    let mut fetch_sequence = Vec::with_capacity(cfg.max_hops * cfg.beam);

    while state.hop < cfg.max_hops {
        let real = state.frontier.len();
        let mut batch = state.frontier.clone();
        let filler = batch.first().copied().unwrap_or(first);
        batch.resize(cfg.beam, filler);
        let records = fetch(&batch)?;
        if records.len() != batch.len() {
            return Err(GraphError::MalformedRecord(format!(
                "{} records returned for {} requests",
                records.len(),
                batch.len()
            ))
            .into());
        }
        fetch_sequence.extend_from_slice(&batch);

        for (rec, &want) in records.iter().zip(&batch).take(real) {
            if rec.node_id != want as u64 {
                return Err(GraphError::MalformedRecord(format!(
                    "requested node {want}, got record for {}",
                    rec.node_id
                ))
                .into());
            }
            state.visited.insert(want);
            state.scored.insert(want, quantized_dot(query, &rec.vector));
            for (&nb, v) in rec.neighbors.iter().zip(&rec.neighbor_vectors) {
                if (nb as usize) < n_nodes {
                    state.scored.entry(nb).or_insert_with(|| quantized_dot(query, v));
                }
            }
        }

        let mut candidates: Vec<(u32, i64)> = state
            .scored
            .iter()
            .filter(|(id, _)| !state.visited.contains(id))
            .map(|(&id, &s)| (id, s))
            .collect();
        candidates.sort_by(rank);
        state.frontier = candidates.into_iter().take(cfg.beam).map(|(id, _)| id).collect();
        state.hop += 1;
    }

    let mut results: Vec<(u32, i64)> = state.scored.into_iter().collect();
    results.sort_by(rank);
    results.truncate(cfg.top_k);
    Ok(TraversalOutcome {
        results,
        fetch_sequence,
    })
}

/// Entry points for a query: the published entry node of each of the `beam`
/// clusters whose routing centroids are closest by cosine (ties to the
/// smaller cluster), deduplicated.
pub fn routed_entries(
    query: &[f32],
    routing_centroids: &[Vec<f32>],
    cluster_entries: &[u32],
    beam: usize,
) -> Vec<u32> {
    let mut order: Vec<(usize, f64)> = routing_centroids
        .iter()
        .enumerate()
        .map(|(j, c)| (j, cosine(query, c)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(beam);
    for (j, _) in order {
        if out.len() == beam {
            break;
        }
        let e = cluster_entries[j];
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}
