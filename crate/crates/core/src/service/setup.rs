//! The one-time download a client needs before querying.
//!
//! ```text
//! [u8 section mask][u64 d][u64 k][u64 chunk_size][u64 n_docs]
//! k*d x f32 routing centroids (L2-normalized)
//! params, hint                                        cluster matrix
//! [docs]    params, hint, n_docs x u64 doc_id         column order
//! [graph]   u64 degree, f32 maxabs, u32 medoid, k x u32 cluster entries,
//!           params, hint
//! [scoring] f32 maxabs, u64 capacity, params,
//!           k x (u64 fill, fill x u64 doc_id, hint)
//! ```

use crate::codec::{CodecError, Reader, Writer};
use crate::index::PirIndex;
use crate::lwe::{AnyHint, LweParams};

pub const SECTION_DOCS: u8 = 1;
pub const SECTION_GRAPH: u8 = 2;
pub const SECTION_SCORING: u8 = 4;
pub const ALL_SECTIONS: u8 = SECTION_DOCS | SECTION_GRAPH | SECTION_SCORING;

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixInfo {
    pub params: LweParams,
    pub hint: AnyHint,
}

impl MatrixInfo {
    fn encode(&self, w: &mut Writer) {
        w.params(&self.params);
        w.hint(&self.hint);
    }

    fn decode(r: &mut Reader) -> Result<Self, CodecError> {
        let params = r.params()?;
        let hint = r.hint()?;
        if hint.cols() != params.lwe_dim || hint.width() != params.profile.residue_bytes() {
            return Err(CodecError::Invalid("hint does not match its params".into()));
        }
        Ok(Self { params, hint })
    }

    /// Rows of the served matrix, which is the length of every answer.
    pub fn rows(&self) -> usize {
        self.hint.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphInfo {
    pub degree: usize,
    pub maxabs: f32,
    pub medoid: u32,
    pub cluster_entries: Vec<u32>,
    pub matrix: MatrixInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringInfo {
    pub maxabs: f32,
    pub capacity: usize,
    pub params: LweParams,
    pub row_doc_ids: Vec<Vec<u64>>,
    pub hints: Vec<AnyHint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetupInfo {
    pub dim: usize,
    pub chunk_size: usize,
    pub n_docs: usize,
    pub centroids: Vec<Vec<f32>>,
    pub cluster: MatrixInfo,
    pub docs: Option<(MatrixInfo, Vec<u64>)>,
    pub graph: Option<GraphInfo>,
    pub scoring: Option<ScoringInfo>,
}

impl SetupInfo {
    /// Public view of `index`, restricted to the sections in `mask` that the
    /// index actually has.
    pub fn from_index(index: &PirIndex, mask: u8) -> Self {
        Self {
            dim: index.dim,
            chunk_size: index.cluster.chunks.chunk_size,
            n_docs: index.n_docs(),
            centroids: index.model.routing_centroids(),
            cluster: MatrixInfo {
                params: index.cluster.params.clone(),
                hint: index.cluster.hint.clone(),
            },
            docs: index.docs.as_ref().filter(|_| mask & SECTION_DOCS != 0).map(|d| {
                (
                    MatrixInfo {
                        params: d.params.clone(),
                        hint: d.hint.clone(),
                    },
                    d.docs.doc_ids.clone(),
                )
            }),
            graph: index.graph.as_ref().filter(|_| mask & SECTION_GRAPH != 0).map(|g| GraphInfo {
                degree: g.degree,
                maxabs: g.maxabs,
                medoid: g.medoid,
                cluster_entries: g.cluster_entries.clone(),
                matrix: MatrixInfo {
                    params: g.params.clone(),
                    hint: g.hint.clone(),
                },
            }),
            scoring: index
                .scoring
                .as_ref()
                .filter(|_| mask & SECTION_SCORING != 0)
                .map(|s| ScoringInfo {
                    maxabs: s.maxabs,
                    capacity: s.matrices.capacity,
                    params: s.params.clone(),
                    row_doc_ids: s.matrices.row_doc_ids.clone(),
                    hints: s.hints.clone(),
                }),
        }
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    fn mask(&self) -> u8 {
        let mut m = 0;
        if self.docs.is_some() {
            m |= SECTION_DOCS;
        }
        if self.graph.is_some() {
            m |= SECTION_GRAPH;
        }
        if self.scoring.is_some() {
            m |= SECTION_SCORING;
        }
        m
    }

    pub fn encode(&self, w: &mut Writer) {
        w.u8(self.mask());
        w.len_u64(self.dim);
        w.len_u64(self.k());
        w.len_u64(self.chunk_size);
        w.len_u64(self.n_docs);
        self.centroids.iter().for_each(|c| w.f32s(c));
        self.cluster.encode(w);
        if let Some((m, ids)) = &self.docs {
            m.encode(w);
            ids.iter().for_each(|&id| w.u64(id));
        }
        if let Some(g) = &self.graph {
            w.len_u64(g.degree);
            w.f32(g.maxabs);
            w.u32(g.medoid);
            g.cluster_entries.iter().for_each(|&e| w.u32(e));
            g.matrix.encode(w);
        }
        if let Some(s) = &self.scoring {
            w.f32(s.maxabs);
            w.len_u64(s.capacity);
            w.params(&s.params);
            for (ids, h) in s.row_doc_ids.iter().zip(&s.hints) {
                w.len_u64(ids.len());
                ids.iter().for_each(|&id| w.u64(id));
                w.hint(h);
            }
        }
    }

    pub fn decode(r: &mut Reader) -> Result<Self, CodecError> {
        let mask = r.u8()?;
        if mask & !ALL_SECTIONS != 0 {
            return Err(CodecError::Invalid(format!("section mask {mask:#x}")));
        }
        let dim = r.len_u64(0)?;
        if dim == 0 {
            return Err(CodecError::Invalid("zero embedding dimension".into()));
        }
        let k = r.len_u64(dim.saturating_mul(4))?;
        let chunk_size = r.len_u64(0)?;
        let n_docs = r.len_u64(0)?;
        let centroids = (0..k).map(|_| r.f32s(dim)).collect::<Result<Vec<_>, _>>()?;
        let cluster = MatrixInfo::decode(r)?;
        if cluster.params.n_cols != k {
            return Err(CodecError::Invalid("cluster params do not match k".into()));
        }
        let docs = if mask & SECTION_DOCS != 0 {
            let m = MatrixInfo::decode(r)?;
            let ids = (0..m.params.n_cols).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
            Some((m, ids))
        } else {
            None
        };
        let graph = if mask & SECTION_GRAPH != 0 {
            let degree = r.len_u64(0)?;
            let maxabs = r.f32()?;
            let medoid = r.u32()?;
            let cluster_entries = (0..k).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let matrix = MatrixInfo::decode(r)?;
            Some(GraphInfo {
                degree,
                maxabs,
                medoid,
                cluster_entries,
                matrix,
            })
        } else {
            None
        };
        let scoring = if mask & SECTION_SCORING != 0 {
            let maxabs = r.f32()?;
            let capacity = r.len_u64(0)?;
            let params = r.params()?;
            let mut row_doc_ids = Vec::with_capacity(k);
            let mut hints = Vec::with_capacity(k);
            for _ in 0..k {
                let fill = r.len_u64(8)?;
                row_doc_ids.push((0..fill).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?);
                hints.push(r.hint()?);
            }
            Some(ScoringInfo {
                maxabs,
                capacity,
                params,
                row_doc_ids,
                hints,
            })
        } else {
            None
        };
        Ok(Self {
            dim,
            chunk_size,
            n_docs,
            centroids,
            cluster,
            docs,
            graph,
            scoring,
        })
    }
}
