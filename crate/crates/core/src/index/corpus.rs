use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::IndexError;

/// One embedded document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    #[serde(rename = "id")]
    pub doc_id: u64,
    pub embedding: Vec<f32>,
    pub text: String,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    dim: usize,
    count: usize,
}

/// Loads a JSON-lines corpus. See [`parse_corpus`].
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<EmbeddingRecord>, IndexError> {
    let file = File::open(path.as_ref())?;
    parse_corpus(BufReader::new(file))
}

/// Parses `{"id", "embedding", "text"}` lines, optionally preceded by a
/// `{"dim", "count"}` manifest. Blank lines are skipped. Line numbers in
/// errors are 1-based.
pub fn parse_corpus(reader: impl BufRead) -> Result<Vec<EmbeddingRecord>, IndexError> {
    let mut records = Vec::new();
    let mut manifest: Option<Manifest> = None;
    let mut dim: Option<usize> = None;
    let mut seen = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| IndexError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;

        let is_manifest = value.get("dim").is_some() && value.get("embedding").is_none();
        if is_manifest {
            if line_no != 1 {
                return Err(IndexError::Parse {
                    line: line_no,
                    message: "manifest is only allowed on the first line".into(),
                });
            }
            let m: Manifest = serde_json::from_value(value).map_err(|e| IndexError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            dim = Some(m.dim);
            manifest = Some(m);
            continue;
        }

        let record: EmbeddingRecord =
            serde_json::from_value(value).map_err(|e| IndexError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if let Some(bad) = record.embedding.iter().position(|x| !x.is_finite()) {
            return Err(IndexError::Parse {
                line: line_no,
                message: format!("embedding[{bad}] is not finite"),
            });
        }
        match dim {
            None => dim = Some(record.embedding.len()),
            Some(d) if d != record.embedding.len() => {
                return Err(IndexError::DimensionMismatch {
                    line: line_no,
                    expected: d,
                    found: record.embedding.len(),
                })
            }
            Some(_) => {}
        }
        if !seen.insert(record.doc_id) {
            return Err(IndexError::DuplicateId {
                line: line_no,
                id: record.doc_id,
            });
        }
        records.push(record);
    }

    if let Some(m) = manifest {
        if m.count != records.len() {
            return Err(IndexError::Parse {
                line: 1,
                message: format!(
                    "manifest declares {} records, file holds {}",
                    m.count,
                    records.len()
                ),
            });
        }
    }
    Ok(records)
}

/// Writes records as JSON lines with a leading manifest.
pub fn write_corpus(
    mut out: impl std::io::Write,
    records: &[EmbeddingRecord],
) -> Result<(), IndexError> {
    let dim = records.first().map_or(0, |r| r.embedding.len());
    writeln!(
        out,
        "{}",
        serde_json::json!({ "dim": dim, "count": records.len() })
    )?;
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::other)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<EmbeddingRecord>, IndexError> {
        parse_corpus(s.as_bytes())
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn three_records() {
        let src = r#"{"id": 1, "embedding": [0.5, 0.5, 0.5, 0.5], "text": "a"}
{"id": 2, "embedding": [1, 0, 0, 0], "text": ""}
{"id": 30, "embedding": [0, 0, 0, -1], "text": "héllo"}
"#;
        let r = parse(src).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].doc_id, 1);
        assert_eq!(r[0].embedding, vec![0.5; 4]);
        assert_eq!(r[1].text, "");
        assert_eq!(r[2].doc_id, 30);
        assert_eq!(r[2].embedding, vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(r[2].text, "héllo");
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let src = r#"{"id": 1, "embedding": [1, 2, 3, 4], "text": "a"}
{"id": 2, "embedding": [1, 2, 3], "text": "b"}"#;
        assert!(matches!(
            parse(src),
            Err(IndexError::DimensionMismatch {
                line: 2,
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn manifest_dimension_enforced() {
        let src = r#"{"dim": 3, "count": 1}
{"id": 1, "embedding": [1, 2, 3, 4], "text": "a"}"#;
        assert!(matches!(
            parse(src),
            Err(IndexError::DimensionMismatch { line: 2, .. })
        ));
    }

    #[test]
    fn manifest_count_enforced() {
        let src = r#"{"dim": 1, "count": 2}
{"id": 1, "embedding": [1], "text": "a"}"#;
        assert!(matches!(parse(src), Err(IndexError::Parse { line: 1, .. })));
    }

    #[test]
    fn duplicate_id() {
        let src = r#"{"id": 5, "embedding": [1], "text": "a"}
{"id": 6, "embedding": [1], "text": "a"}
{"id": 5, "embedding": [1], "text": "a"}"#;
        assert!(matches!(
            parse(src),
            Err(IndexError::DuplicateId { line: 3, id: 5 })
        ));
    }

    #[test]
    fn malformed_line() {
        let src = "{\"id\": 1, \"embedding\": [1], \"text\": \"a\"}\nnot json\n";
        assert!(matches!(parse(src), Err(IndexError::Parse { line: 2, .. })));
        let src = r#"{"id": -1, "embedding": [1], "text": "a"}"#;
        assert!(matches!(parse(src), Err(IndexError::Parse { line: 1, .. })));
        let src = r#"{"id": 1, "embedding": [1e300], "text": "a"}"#;
        assert!(matches!(parse(src), Err(IndexError::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_parse() {
        let recs = vec![
            EmbeddingRecord {
                doc_id: 3,
                embedding: vec![0.25, -0.125],
                text: "x".into(),
            },
            EmbeddingRecord {
                doc_id: 9,
                embedding: vec![1.0, 0.0],
                text: "line\nbreak".into(),
            },
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &recs).unwrap();
        assert_eq!(parse_corpus(&buf[..]).unwrap(), recs);
    }
}
