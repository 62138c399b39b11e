//! Cluster byte framing.
//!
//! ```text
//! [u32 doc_count]
//! doc_count x ( [u64 doc_id][u32 text_len][d x f32 embedding][text bytes] )
//! zero padding up to target_chunks * chunk_size
//! ```
//!
//! All integers and floats are little-endian. The embedding dimension is not
//! framed; the reader must know it.

use thiserror::Error;

use super::{EmbeddingRecord, IndexError};

const DOC_COUNT_BYTES: usize = 4;
const DOC_HEADER_BYTES: usize = 8 + 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("framing error at byte {offset}: {message}")]
pub struct FramingError {
    pub offset: usize,
    pub message: String,
}

/// Framed size of one document, without the leading doc count.
pub fn framed_doc_len(doc: &EmbeddingRecord) -> usize {
    DOC_HEADER_BYTES + 4 * doc.embedding.len() + doc.text.len()
}

/// Framed size of a document list, including the leading doc count.
pub fn framed_len<'a>(docs: impl IntoIterator<Item = &'a EmbeddingRecord>) -> usize {
    DOC_COUNT_BYTES + docs.into_iter().map(framed_doc_len).sum::<usize>()
}

/// Chunks needed to hold `bytes`, at least one.
pub fn chunks_for(bytes: usize, chunk_size: usize) -> usize {
    bytes.div_ceil(chunk_size).max(1)
}

/// Frames `docs` and zero-pads to `target_chunks * chunk_size` bytes.
pub fn pack_cluster_bytes<'a>(
    docs: impl IntoIterator<Item = &'a EmbeddingRecord>,
    chunk_size: usize,
    target_chunks: usize,
) -> Result<Vec<u8>, IndexError> {
    let docs: Vec<&EmbeddingRecord> = docs.into_iter().collect();
    let capacity = chunk_size * target_chunks;
    let needed = framed_len(docs.iter().copied());
    if needed > capacity {
        return Err(IndexError::ClusterOverflow { needed, capacity });
    }
    let mut out = Vec::with_capacity(capacity);
    out.extend_from_slice(&(docs.len() as u32).to_le_bytes());
    for doc in docs {
        out.extend_from_slice(&doc.doc_id.to_le_bytes());
        out.extend_from_slice(&(doc.text.len() as u32).to_le_bytes());
        for x in &doc.embedding {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out.extend_from_slice(doc.text.as_bytes());
    }
    out.resize(capacity, 0);
    Ok(out)
}

/// Inverse of [`pack_cluster_bytes`]; trailing padding is ignored.
pub fn unpack_cluster(stream: &[u8], dim: usize) -> Result<Vec<EmbeddingRecord>, FramingError> {
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str| -> Result<(usize, usize), FramingError> {
        if stream.len() - pos < n {
            return Err(FramingError {
                offset: pos,
                message: format!(
                    "{what} needs {n} bytes, {} remain",
                    stream.len() - pos
                ),
            });
        }
        let start = pos;
        pos += n;
        Ok((start, pos))
    };

    let (s, e) = take(DOC_COUNT_BYTES, "doc_count")?;
    let count = u32::from_le_bytes(stream[s..e].try_into().unwrap()) as usize;
    // Each document needs at least its header and embedding.
    let min_doc = DOC_HEADER_BYTES + 4 * dim;
    if count.saturating_mul(min_doc) > stream.len() - e {
        return Err(FramingError {
            offset: 0,
            message: format!("doc_count {count} cannot fit in {} bytes", stream.len()),
        });
    }

    let mut docs = Vec::with_capacity(count);
    for _ in 0..count {
        let (s, e) = take(8, "doc_id")?;
        let doc_id = u64::from_le_bytes(stream[s..e].try_into().unwrap());
        let (s, e) = take(4, "text_len")?;
        let text_len = u32::from_le_bytes(stream[s..e].try_into().unwrap()) as usize;
        let (s, e) = take(4 * dim, "embedding")?;
        let embedding = stream[s..e]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (s, e) = take(text_len, "text")?;
        let text = String::from_utf8(stream[s..e].to_vec()).map_err(|err| FramingError {
            offset: s,
            message: format!("text is not UTF-8: {err}"),
        })?;
        docs.push(EmbeddingRecord {
            doc_id,
            embedding,
            text,
        });
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: u64, emb: Vec<f32>, text: &str) -> EmbeddingRecord {
        EmbeddingRecord {
            doc_id: id,
            embedding: emb,
            text: text.into(),
        }
    }

    #[test]
    fn empty_list_is_count_then_padding() {
        let b = pack_cluster_bytes([], 8, 2).unwrap();
        assert_eq!(b, vec![0u8; 16]);
        assert!(unpack_cluster(&b, 3).unwrap().is_empty());
    }

    #[test]
    fn single_doc_layout_and_roundtrip() {
        let d = doc(7, vec![1.0, -2.0], "ab");
        let b = pack_cluster_bytes([&d], 16, 2).unwrap();
        assert_eq!(b.len(), 32);
        assert_eq!(&b[..4], &[1, 0, 0, 0]);
        assert_eq!(&b[4..12], &7u64.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        assert_eq!(&b[16..20], &1.0f32.to_le_bytes());
        assert_eq!(&b[20..24], &(-2.0f32).to_le_bytes());
        assert_eq!(&b[24..26], b"ab");
        assert!(b[26..].iter().all(|&x| x == 0));
        assert_eq!(unpack_cluster(&b, 2).unwrap(), vec![d]);
    }

    #[test]
    fn exact_capacity_fits() {
        let d = doc(1, vec![0.5], "abcd");
        let need = framed_len([&d]);
        assert_eq!(need, 4 + 12 + 4 + 4);
        let b = pack_cluster_bytes([&d], need, 1).unwrap();
        assert_eq!(b.len(), need);
        assert!(matches!(
            pack_cluster_bytes([&d], need - 1, 1),
            Err(IndexError::ClusterOverflow { .. })
        ));
    }

    #[test]
    fn all_zero_stream_is_empty() {
        assert!(unpack_cluster(&[0u8; 64], 4).unwrap().is_empty());
    }

    #[test]
    fn overrunning_text_len_is_framing_error() {
        let d = doc(1, vec![0.5], "abcd");
        let mut b = pack_cluster_bytes([&d], 64, 1).unwrap();
        b[12..16].copy_from_slice(&1000u32.to_le_bytes());
        assert!(unpack_cluster(&b, 1).is_err());
        let mut b = pack_cluster_bytes([&d], 64, 1).unwrap();
        b[..4].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(unpack_cluster(&b, 1).is_err());
        assert!(unpack_cluster(&[1, 0], 1).is_err());
    }

    fn arb_docs() -> impl Strategy<Value = (usize, Vec<EmbeddingRecord>)> {
        (0usize..6).prop_flat_map(|dim| {
            let d = prop::collection::vec(
                (
                    any::<u64>(),
                    prop::collection::vec(-1e6f32..1e6, dim),
                    ".{0,40}",
                ),
                0..8,
            )
            .prop_map(|v| {
                v.into_iter()
                    .map(|(id, e, t)| doc(id, e, &t))
                    .collect::<Vec<_>>()
            });
            (Just(dim), d)
        })
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip((dim, docs) in arb_docs(), chunk in 1usize..64) {
            let chunks = chunks_for(framed_len(&docs), chunk);
            let b = pack_cluster_bytes(&docs, chunk, chunks).unwrap();
            prop_assert_eq!(b.len(), chunks * chunk);
            prop_assert_eq!(unpack_cluster(&b, dim).unwrap(), docs);
        }
    }
}
