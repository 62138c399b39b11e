use std::collections::HashMap;

use super::packing::{chunks_for, framed_len, pack_cluster_bytes};
use super::{EmbeddingRecord, IndexError};
use crate::lwe::PlainMatrix;

/// The chunk-transposed cluster database over `Z_256`: column `j` holds
/// cluster `j`'s framed bytes, one byte per entry, so fetching a whole
/// cluster is a single matrix-vector product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkMatrix {
    pub chunk_size: usize,
    pub matrix: PlainMatrix<u8>,
}

impl ChunkMatrix {
    /// Rows: chunks per cluster times bytes per chunk.
    pub fn m_rows(&self) -> usize {
        self.matrix.rows()
    }

    /// Columns: clusters.
    pub fn n_cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn chunks_per_cluster(&self) -> usize {
        self.m_rows() / self.chunk_size
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        self.matrix.column(j)
    }
}

/// Transposes equal-length cluster streams into a [`ChunkMatrix`]: entry
/// `(i, j)` is byte `i` of stream `j`.
pub fn build_chunk_matrix(streams: &[Vec<u8>], chunk_size: usize) -> Result<ChunkMatrix, IndexError> {
    let len = streams.first().map_or(0, Vec::len);
    if let Some(bad) = streams.iter().position(|s| s.len() != len) {
        return Err(IndexError::UnequalStreamLengths {
            expected: len,
            found: streams[bad].len(),
            stream: bad,
        });
    }
    let matrix = PlainMatrix::from_columns(streams)?;
    Ok(ChunkMatrix { chunk_size, matrix })
}

/// One document per column, each framed as a single-document cluster and
/// padded to the longest framed document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocMatrix {
    pub chunk_size: usize,
    pub matrix: PlainMatrix<u8>,
    /// Column `j` holds document `doc_ids[j]`.
    pub doc_ids: Vec<u64>,
    column_of: HashMap<u64, usize>,
}

impl DocMatrix {
    pub fn new(chunk_size: usize, matrix: PlainMatrix<u8>, doc_ids: Vec<u64>) -> Result<Self, IndexError> {
        if doc_ids.len() != matrix.cols() {
            return Err(IndexError::Inconsistent(format!(
                "doc map has {} ids for {} columns",
                doc_ids.len(),
                matrix.cols()
            )));
        }
        let column_of: HashMap<u64, usize> =
            doc_ids.iter().enumerate().map(|(j, &id)| (id, j)).collect();
        if column_of.len() != doc_ids.len() {
            return Err(IndexError::Inconsistent("duplicate doc id in doc map".into()));
        }
        Ok(Self {
            chunk_size,
            matrix,
            doc_ids,
            column_of,
        })
    }

    pub fn column_of(&self, doc_id: u64) -> Option<usize> {
        self.column_of.get(&doc_id).copied()
    }

    pub fn column(&self, j: usize) -> Vec<u8> {
        self.matrix.column(j)
    }
}

pub fn build_doc_matrix(records: &[EmbeddingRecord], chunk_size: usize) -> Result<DocMatrix, IndexError> {
    if records.is_empty() {
        return Err(IndexError::EmptyCorpus);
    }
    let longest = records.iter().map(|r| framed_len([r])).max().unwrap();
    let chunks = chunks_for(longest, chunk_size);
    let streams = records
        .iter()
        .map(|r| pack_cluster_bytes([r], chunk_size, chunks))
        .collect::<Result<Vec<_>, _>>()?;
    let matrix = PlainMatrix::from_columns(&streams)?;
    DocMatrix::new(chunk_size, matrix, records.iter().map(|r| r.doc_id).collect())
}
