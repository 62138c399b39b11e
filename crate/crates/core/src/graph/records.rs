//! Fixed-size node records, one per column of the node matrix.
//!
//! ```text
//! [u64 node_id]
//! [d bytes: own quantized vector, offset 128]
//! [degree x u32 neighbor ids]
//! [degree x d bytes: neighbor quantized vectors, offset 128]
//! ```
//!
//! Carrying the neighbor vectors lets one fetch score a node's whole
//! neighborhood. Nodes with fewer than `degree` neighbors pad with their own
//! id and vector.

use super::GraphError;
use crate::lwe::PlainMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub node_id: u64,
    pub vector: Vec<i8>,
    pub neighbors: Vec<u32>,
    pub neighbor_vectors: Vec<Vec<i8>>,
}

pub fn record_len(d: usize, degree: usize) -> usize {
    8 + d + degree * (4 + d)
}

fn to_offset(q: i8) -> u8 {
    (q as i16 + 128) as u8
}

fn from_offset(b: u8) -> i8 {
    (b as i16 - 128) as i8
}

fn write_vector(out: &mut Vec<u8>, v: &[i8]) {
    out.extend(v.iter().map(|&q| to_offset(q)));
}

pub fn encode_node_record(
    node: u32,
    neighbors: &[u32],
    quantized: &[Vec<i8>],
    degree: usize,
) -> Vec<u8> {
    let d = quantized[node as usize].len();
    let padded: Vec<u32> = neighbors
        .iter()
        .copied()
        .chain(std::iter::repeat(node))
        .take(degree)
        .collect();
    let mut out = Vec::with_capacity(record_len(d, degree));
    out.extend_from_slice(&(node as u64).to_le_bytes());
    write_vector(&mut out, &quantized[node as usize]);
    for &nb in &padded {
        out.extend_from_slice(&nb.to_le_bytes());
    }
    for &nb in &padded {
        write_vector(&mut out, &quantized[nb as usize]);
    }
    out
}

/// Builds the node matrix: column `j` is node `j`'s record.
pub fn encode_node_records(
    graph: &[Vec<u32>],
    quantized: &[Vec<i8>],
    degree: usize,
) -> Result<PlainMatrix<u8>, GraphError> {
    if graph.len() != quantized.len() {
        return Err(GraphError::InvalidConfig(format!(
            "graph has {} nodes but {} vectors were given",
            graph.len(),
            quantized.len()
        )));
    }
    if let Some(bad) = graph.iter().position(|nb| nb.len() > degree) {
        return Err(GraphError::InvalidConfig(format!(
            "node {bad} has {} neighbors, more than degree {degree}",
            graph[bad].len()
        )));
    }
    let columns: Vec<Vec<u8>> = graph
        .iter()
        .enumerate()
        .map(|(i, nb)| encode_node_record(i as u32, nb, quantized, degree))
        .collect();
    PlainMatrix::from_columns(&columns).map_err(GraphError::from)
}

pub fn decode_node_record(bytes: &[u8], d: usize, degree: usize) -> Result<NodeRecord, GraphError> {
    let len = record_len(d, degree);
    if bytes.len() < len {
        return Err(GraphError::MalformedRecord(format!(
            "record has {} bytes, expected {len}",
            bytes.len()
        )));
    }
    let node_id = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let vector = bytes[8..8 + d].iter().map(|&b| from_offset(b)).collect();
    let ids_start = 8 + d;
    let neighbors: Vec<u32> = bytes[ids_start..ids_start + 4 * degree]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let vecs_start = ids_start + 4 * degree;
    let neighbor_vectors = if d == 0 {
        vec![Vec::new(); degree]
    } else {
        bytes[vecs_start..vecs_start + degree * d]
            .chunks_exact(d)
            .map(|c| c.iter().map(|&b| from_offset(b)).collect())
            .collect()
    };
    Ok(NodeRecord {
        node_id,
        vector,
        neighbors,
        neighbor_vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_vector_is_offset_128() {
        let q = vec![vec![0i8; 4], vec![1, -1, 127, -127]];
        let rec = encode_node_record(0, &[1], &q, 1);
        assert_eq!(rec.len(), record_len(4, 1));
        assert_eq!(&rec[8..12], &[128; 4]);
        assert_eq!(&rec[16..20], &[129, 127, 255, 1]);
    }

    #[test]
    fn short_lists_pad_with_self() {
        let q = vec![vec![3i8, 4], vec![5, 6], vec![7, 8]];
        let m = encode_node_records(&[vec![1], vec![0, 2], vec![]], &q, 2).unwrap();
        let r0 = decode_node_record(&m.column(0), 2, 2).unwrap();
        assert_eq!(r0.neighbors, vec![1, 0]);
        assert_eq!(r0.neighbor_vectors, vec![vec![5, 6], vec![3, 4]]);
        let r2 = decode_node_record(&m.column(2), 2, 2).unwrap();
        assert_eq!(r2.neighbors, vec![2, 2]);
        assert!(encode_node_records(&[vec![1, 2, 0]], &q[..1], 2).is_err());
    }

    #[test]
    fn truncated_record_rejected() {
        assert!(matches!(
            decode_node_record(&[0; 10], 4, 1),
            Err(GraphError::MalformedRecord(_))
        ));
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(
            d in 0usize..12,
            n in 2usize..12,
            degree in 1usize..5,
            seed in any::<u64>(),
        ) {
            let q: Vec<Vec<i8>> = (0..n)
                .map(|i| (0..d).map(|j| ((seed as usize + i * 31 + j * 7) % 255) as i8).map(|x| x.max(-127)).collect())
                .collect();
            let graph: Vec<Vec<u32>> = (0..n)
                .map(|i| (1..=degree.min(n - 1)).map(|s| ((i + s) % n) as u32).collect())
                .collect();
            let m = encode_node_records(&graph, &q, degree).unwrap();
            prop_assert_eq!(m.rows(), record_len(d, degree));
            for i in 0..n {
                let r = decode_node_record(&m.column(i), d, degree).unwrap();
                prop_assert_eq!(r.node_id, i as u64);
                prop_assert_eq!(&r.vector, &q[i]);
                prop_assert_eq!(&r.neighbors[..graph[i].len()], &graph[i][..]);
                for (nb, v) in r.neighbors.iter().zip(&r.neighbor_vectors) {
                    prop_assert_eq!(v, &q[*nb as usize]);
                }
            }
        }
    }
}
