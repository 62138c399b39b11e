//! The `PRAG1` index file.
//!
//! ```text
//! "PRAG1" u16 version
//! u64 d, u64 N, N x u64 doc_id                       corpus order
//! u64 k, k*d x f32 centroids, N x u32 assignments
//! u64 len, len x f64 objective history
//! u64 chunk_size, u8 matrix, params, hint           cluster matrix (target 0)
//! u8 section flags: 1 docs, 2 graph, 4 scoring
//! [docs]    u64 chunk_size, u8 matrix, params, hint  (target 1)
//! [graph]   u64 degree, f32 maxabs, u32 medoid, u64 k, k x u32 entries,
//!           u8 matrix, params, hint                  (target 2)
//! [scoring] f32 maxabs, u64 capacity, params, u64 k,
//!           k x (i8 matrix, u64 fill, fill x u64 doc_id, hint)
//! ```
//!
//! Matrices are `u64 rows, u64 cols` followed by row-major bytes. Params are
//! `u32 lwe_dim, u8 profile, u64 plain_mod, u32 err_bound, u64 n_cols,
//! 32-byte seed`. Hints are `u64 rows, u64 cols, u8 width` followed by
//! row-major residues. Everything is little-endian.

use std::path::Path;

use super::builder::{ClusterSection, DocSection, PirIndex};
use super::kmeans::ClusterModel;
use super::matrices::{ChunkMatrix, DocMatrix};
use super::IndexError;
use crate::codec::{CodecError, Reader, Writer};
use crate::graph::GraphSection;
use crate::scoring::{EmbeddingMatrices, ScoringSection};

pub const INDEX_MAGIC: &[u8; 5] = b"PRAG1";
pub const INDEX_VERSION: u16 = 1;

const HAS_DOCS: u8 = 1;
const HAS_GRAPH: u8 = 2;
const HAS_SCORING: u8 = 4;

impl From<CodecError> for IndexError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Truncated { .. } => IndexError::TruncatedFile,
            CodecError::Invalid(m) => IndexError::Corrupt(m),
        }
    }
}

impl PirIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(INDEX_MAGIC);
        w.u16(INDEX_VERSION);
        w.len_u64(self.dim);
        w.len_u64(self.doc_ids.len());
        self.doc_ids.iter().for_each(|&id| w.u64(id));

        w.len_u64(self.k());
        self.model.centroids.iter().for_each(|c| w.f32s(c));
        self.model.assignments.iter().for_each(|&a| w.u32(a));
        w.len_u64(self.model.objective_history.len());
        self.model.objective_history.iter().for_each(|&x| w.f64(x));
        w.len_u64(self.cluster.chunks.chunk_size);
        w.u8_matrix(&self.cluster.chunks.matrix);
        w.params(&self.cluster.params);
        w.hint(&self.cluster.hint);

        let mut flags = 0;
        if self.docs.is_some() {
            flags |= HAS_DOCS;
        }
        if self.graph.is_some() {
            flags |= HAS_GRAPH;
        }
        if self.scoring.is_some() {
            flags |= HAS_SCORING;
        }
        w.u8(flags);

        if let Some(d) = &self.docs {
            w.len_u64(d.docs.chunk_size);
            w.u8_matrix(&d.docs.matrix);
            w.params(&d.params);
            w.hint(&d.hint);
        }
        if let Some(g) = &self.graph {
            w.len_u64(g.degree);
            w.f32(g.maxabs);
            w.u32(g.medoid);
            w.len_u64(g.cluster_entries.len());
            g.cluster_entries.iter().for_each(|&e| w.u32(e));
            w.u8_matrix(&g.nodes);
            w.params(&g.params);
            w.hint(&g.hint);
        }
        if let Some(s) = &self.scoring {
            w.f32(s.maxabs);
            w.len_u64(s.matrices.capacity);
            w.params(&s.params);
            w.len_u64(s.k());
            for ((m, ids), h) in s.matrices.matrices.iter().zip(&s.matrices.row_doc_ids).zip(&s.hints) {
                w.i8_matrix(m);
                w.len_u64(ids.len());
                ids.iter().for_each(|&id| w.u64(id));
                w.hint(h);
            }
        }
        w.into_bytes()
    }

    /// Parses and validates an index; no partially read state escapes on
    /// error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        if bytes.len() < INDEX_MAGIC.len() {
            return Err(if INDEX_MAGIC.starts_with(bytes) {
                IndexError::TruncatedFile
            } else {
                IndexError::BadMagic
            });
        }
        let mut r = Reader::new(bytes);
        if r.take(INDEX_MAGIC.len())? != INDEX_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = r.u16()?;
        if version != INDEX_VERSION {
            return Err(IndexError::VersionUnsupported(version));
        }
        let dim = r.len_u64(0)?;
        if dim == 0 {
            return Err(IndexError::Corrupt("zero embedding dimension".into()));
        }
        let n = r.len_u64(8)?;
        let doc_ids = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;

        let k = r.len_u64(dim.saturating_mul(4))?;
        let centroids = (0..k).map(|_| r.f32s(dim)).collect::<Result<Vec<_>, _>>()?;
        let assignments = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
        let hist_len = r.len_u64(8)?;
        let objective_history = (0..hist_len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let model = ClusterModel {
            centroids,
            assignments,
            objective_history,
        };
        let chunk_size = r.len_u64(0)?;
        let matrix = r.u8_matrix()?;
        let params = r.params()?;
        let hint = r.hint()?;
        let cluster = ClusterSection {
            params,
            chunks: ChunkMatrix { chunk_size, matrix },
            hint,
        };

        let flags = r.u8()?;
        if flags & !(HAS_DOCS | HAS_GRAPH | HAS_SCORING) != 0 {
            return Err(IndexError::Corrupt(format!("unknown section flags {flags:#x}")));
        }

        let docs = if flags & HAS_DOCS != 0 {
            let chunk_size = r.len_u64(0)?;
            let matrix = r.u8_matrix()?;
            let params = r.params()?;
            let hint = r.hint()?;
            let docs = DocMatrix::new(chunk_size, matrix, doc_ids.clone())
                .map_err(|e| IndexError::Corrupt(e.to_string()))?;
            Some(DocSection { params, docs, hint })
        } else {
            None
        };

        let graph = if flags & HAS_GRAPH != 0 {
            let degree = r.len_u64(0)?;
            let maxabs = r.f32()?;
            let medoid = r.u32()?;
            let n_entries = r.len_u64(4)?;
            let cluster_entries = (0..n_entries).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let nodes = r.u8_matrix()?;
            let params = r.params()?;
            let hint = r.hint()?;
            Some(GraphSection {
                degree,
                maxabs,
                medoid,
                cluster_entries,
                params,
                nodes,
                hint,
            })
        } else {
            None
        };

        let scoring = if flags & HAS_SCORING != 0 {
            let maxabs = r.f32()?;
            let capacity = r.len_u64(0)?;
            let params = r.params()?;
            let k_s = r.len_u64(1)?;
            let mut matrices = Vec::with_capacity(k_s);
            let mut row_doc_ids = Vec::with_capacity(k_s);
            let mut hints = Vec::with_capacity(k_s);
            for _ in 0..k_s {
                matrices.push(r.i8_matrix()?);
                let fill = r.len_u64(8)?;
                row_doc_ids.push((0..fill).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?);
                hints.push(r.hint()?);
            }
            Some(ScoringSection {
                maxabs,
                params,
                matrices: EmbeddingMatrices {
                    capacity,
                    matrices,
                    row_doc_ids,
                },
                hints,
            })
        } else {
            None
        };

        if !r.is_exhausted() {
            return Err(IndexError::Corrupt(format!("{} trailing bytes", r.remaining())));
        }
        let index = PirIndex {
            dim,
            doc_ids,
            model,
            cluster,
            docs,
            graph,
            scoring,
        };
        index.validate()?;
        Ok(index)
    }
}

pub fn save_index(index: &PirIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    std::fs::write(path, index.to_bytes())?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<PirIndex, IndexError> {
    PirIndex::from_bytes(&std::fs::read(path)?)
}
