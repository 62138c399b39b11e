//! Length-prefixed binary frames.
//!
//! ```text
//! frame        = [u32 len = payload + 1][u8 type][payload]
//! SETUP_REQ    0x01  [u8 section mask]?            (absent: every section)
//! SETUP_RESP   0x02  see SetupInfo
//! PIR_QUERY    0x03  [u8 target][u32 count][count residues]
//! PIR_ANSWER   0x04  [u32 count][count residues]
//! SCORE_QUERY  0x05  [u32 cluster][u32 d][d x u64 residues]
//! SCORE_ANSWER 0x06  [u32 count][count x u64 residues]
//! ERROR        0x7F  [u16 code][UTF-8 message]
//! ```
//!
//! Residue width (4 or 8 bytes) is implied by the payload length. All
//! integers are little-endian.

use std::io::{ErrorKind, Read, Write};

use thiserror::Error;

use super::setup::SetupInfo;
use crate::codec::{CodecError, Reader, Writer};
use crate::lwe::Residues;

pub const SETUP_REQ: u8 = 0x01;
pub const SETUP_RESP: u8 = 0x02;
pub const PIR_QUERY: u8 = 0x03;
pub const PIR_ANSWER: u8 = 0x04;
pub const SCORE_QUERY: u8 = 0x05;
pub const SCORE_ANSWER: u8 = 0x06;
pub const ERROR: u8 = 0x7F;

/// Bytes a frame adds around its payload: length prefix and type.
pub const FRAME_OVERHEAD: usize = 5;

/// Default cap on incoming request frames.
pub const DEFAULT_MAX_REQUEST: usize = 64 << 20;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("frame length {len} exceeds the limit of {max} bytes")]
    FrameTooLarge { len: usize, max: usize },
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unknown message type {0:#04x}")]
    UnknownMessage(u8),
}

impl From<CodecError> for WireError {
    fn from(e: CodecError) -> Self {
        WireError::Malformed(e.to_string())
    }
}

/// In-band error codes carried by ERROR frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum ErrorCode {
    UnknownMessage = 1,
    Malformed = 2,
    DimensionMismatch = 3,
    UnknownTarget = 4,
    UnknownCluster = 5,
    Internal = 6,
}

impl ErrorCode {
    pub fn from_u16(v: u16) -> Option<Self> {
        Some(match v {
            1 => Self::UnknownMessage,
            2 => Self::Malformed,
            3 => Self::DimensionMismatch,
            4 => Self::UnknownTarget,
            5 => Self::UnknownCluster,
            6 => Self::Internal,
            _ => return None,
        })
    }
}

/// Which served matrix a PIR query addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Cluster = 0,
    Doc = 1,
    Node = 2,
}

impl Target {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Cluster),
            1 => Some(Self::Doc),
            2 => Some(Self::Node),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(msg_type: u8, payload: Vec<u8>) -> Self {
        Self { msg_type, payload }
    }

    /// Size on the wire.
    pub fn encoded_len(&self) -> usize {
        FRAME_OVERHEAD + self.payload.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&((self.payload.len() + 1) as u32).to_le_bytes());
        out.push(self.msg_type);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), WireError> {
        w.write_all(&((self.payload.len() + 1) as u32).to_le_bytes())?;
        w.write_all(&[self.msg_type])?;
        w.write_all(&self.payload)?;
        w.flush()?;
        Ok(())
    }

    /// Reads one frame. Returns `None` on a clean end of stream before the
    /// first byte of a frame.
    pub fn read_from(r: &mut impl Read, max_len: usize) -> Result<Option<Self>, WireError> {
        let mut len_buf = [0u8; 4];
        match r.read_exact(&mut len_buf) {
            Ok(()) => {}
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let len = u32::from_le_bytes(len_buf) as usize;
        if len == 0 {
            return Err(WireError::Malformed("frame length 0 has no type byte".into()));
        }
        if len > max_len {
            return Err(WireError::FrameTooLarge { len, max: max_len });
        }
        let mut body = vec![0u8; len];
        r.read_exact(&mut body)?;
        let payload = body.split_off(1);
        Ok(Some(Self {
            msg_type: body[0],
            payload,
        }))
    }

    /// Parses one frame that must span all of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        let mut cursor = bytes;
        let frame = Self::read_from(&mut cursor, usize::MAX)
            .map_err(|e| match e {
                WireError::Io(_) => WireError::Malformed("truncated frame".into()),
                other => other,
            })?
            .ok_or_else(|| WireError::Malformed("empty input".into()))?;
        if !cursor.is_empty() {
            return Err(WireError::Malformed(format!("{} bytes after frame", cursor.len())));
        }
        Ok(frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Requests the sections selected by the mask; `None` asks for all.
    SetupRequest(Option<u8>),
    SetupResponse(Box<SetupInfo>),
    PirQuery { target: Target, query: Residues },
    PirAnswer(Residues),
    ScoreQuery { cluster: u32, query: Vec<u64> },
    ScoreAnswer(Vec<u64>),
    Error { code: u16, message: String },
}

fn write_counted(w: &mut Writer, r: &Residues) {
    w.u32(r.len() as u32);
    w.residues(r);
}

/// `[u32 count][residues]` with the width implied by what remains.
fn read_counted(r: &mut Reader) -> Result<Residues, WireError> {
    let count = r.u32()? as usize;
    let rest = r.rest();
    if count == 0 {
        return if rest.is_empty() {
            Ok(Residues::W32(Vec::new()))
        } else {
            Err(WireError::Malformed("residues present with count 0".into()))
        };
    }
    if !rest.len().is_multiple_of(count) {
        return Err(WireError::Malformed(format!(
            "{} residue bytes do not divide into {count} entries",
            rest.len()
        )));
    }
    let width = rest.len() / count;
    Residues::read_le(rest, width, count)
        .ok_or_else(|| WireError::Malformed(format!("residue width {width}")))
}

impl Message {
    pub fn to_frame(&self) -> Frame {
        let mut w = Writer::new();
        let msg_type = match self {
            Message::SetupRequest(mask) => {
                if let Some(m) = mask {
                    w.u8(*m);
                }
                SETUP_REQ
            }
            Message::SetupResponse(info) => {
                info.encode(&mut w);
                SETUP_RESP
            }
            Message::PirQuery { target, query } => {
                w.u8(*target as u8);
                write_counted(&mut w, query);
                PIR_QUERY
            }
            Message::PirAnswer(r) => {
                write_counted(&mut w, r);
                PIR_ANSWER
            }
            Message::ScoreQuery { cluster, query } => {
                w.u32(*cluster);
                w.u32(query.len() as u32);
                query.iter().for_each(|&x| w.u64(x));
                SCORE_QUERY
            }
            Message::ScoreAnswer(r) => {
                w.u32(r.len() as u32);
                r.iter().for_each(|&x| w.u64(x));
                SCORE_ANSWER
            }
            Message::Error { code, message } => {
                w.u16(*code);
                w.bytes(message.as_bytes());
                ERROR
            }
        };
        Frame::new(msg_type, w.into_bytes())
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, WireError> {
        let mut r = Reader::new(&frame.payload);
        let msg = match frame.msg_type {
            SETUP_REQ => match r.remaining() {
                0 => Message::SetupRequest(None),
                1 => Message::SetupRequest(Some(r.u8()?)),
                n => return Err(WireError::Malformed(format!("setup request of {n} bytes"))),
            },
            SETUP_RESP => {
                let info = SetupInfo::decode(&mut r)?;
                Message::SetupResponse(Box::new(info))
            }
            PIR_QUERY => {
                let t = r.u8()?;
                let target = Target::from_u8(t)
                    .ok_or_else(|| WireError::Malformed(format!("target {t}")))?;
                Message::PirQuery {
                    target,
                    query: read_counted(&mut r)?,
                }
            }
            PIR_ANSWER => Message::PirAnswer(read_counted(&mut r)?),
            SCORE_QUERY => {
                let cluster = r.u32()?;
                let d = r.u32()? as usize;
                if r.remaining() != d.saturating_mul(8) {
                    return Err(WireError::Malformed(format!(
                        "score query declares {d} residues but carries {} bytes",
                        r.remaining()
                    )));
                }
                let query = (0..d).map(|_| r.u64()).collect::<Result<_, _>>()?;
                Message::ScoreQuery { cluster, query }
            }
            SCORE_ANSWER => {
                let n = r.u32()? as usize;
                if r.remaining() != n.saturating_mul(8) {
                    return Err(WireError::Malformed("score answer length".into()));
                }
                Message::ScoreAnswer((0..n).map(|_| r.u64()).collect::<Result<_, _>>()?)
            }
            ERROR => {
                let code = r.u16()?;
                let message = String::from_utf8_lossy(r.rest()).into_owned();
                Message::Error { code, message }
            }
            other => return Err(WireError::UnknownMessage(other)),
        };
        if !r.is_exhausted() {
            return Err(WireError::Malformed("trailing payload bytes".into()));
        }
        Ok(msg)
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Message::Error {
            code: code as u16,
            message: message.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(m: Message) {
        let f = m.to_frame();
        let bytes = f.encode();
        assert_eq!(bytes.len(), f.encoded_len());
        let back = Frame::decode(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(Message::from_frame(&back).unwrap(), m);
    }

    #[test]
    fn messages_roundtrip() {
        roundtrip(Message::SetupRequest(None));
        roundtrip(Message::SetupRequest(Some(3)));
        roundtrip(Message::PirQuery {
            target: Target::Doc,
            query: Residues::W32(vec![1, 2, 3]),
        });
        roundtrip(Message::PirQuery {
            target: Target::Node,
            query: Residues::W64(vec![u64::MAX]),
        });
        roundtrip(Message::PirAnswer(Residues::W32(vec![9; 7])));
        roundtrip(Message::ScoreQuery {
            cluster: 4,
            query: vec![5, 6],
        });
        roundtrip(Message::ScoreAnswer(vec![1, 2, 3]));
        roundtrip(Message::error(ErrorCode::DimensionMismatch, "bad length"));
    }

    #[test]
    fn fetch_query_overhead_is_ten_bytes() {
        let f = Message::PirQuery {
            target: Target::Cluster,
            query: Residues::W32(vec![0; 45]),
        }
        .to_frame();
        assert_eq!(f.encoded_len(), 45 * 4 + 10);
        assert_eq!(&f.encode()[..5], &[(45 * 4 + 6) as u8, 0, 0, 0, PIR_QUERY]);
    }

    #[test]
    fn framing_errors() {
        assert!(Frame::decode(&[0, 0, 0, 0]).is_err());
        assert!(Frame::decode(&[5, 0, 0, 0, 1]).is_err());
        assert!(Frame::decode(&[1, 0, 0, 0, 1, 9]).is_err());
        let mut big: &[u8] = &[0xff, 0xff, 0xff, 0x7f, 1];
        assert!(matches!(
            Frame::read_from(&mut big, 1024),
            Err(WireError::FrameTooLarge { .. })
        ));
        let mut empty: &[u8] = &[];
        assert!(Frame::read_from(&mut empty, 16).unwrap().is_none());
    }

    #[test]
    fn payload_errors() {
        let bad = |t: u8, p: &[u8]| Message::from_frame(&Frame::new(t, p.to_vec())).is_err();
        assert!(matches!(
            Message::from_frame(&Frame::new(0x50, vec![])),
            Err(WireError::UnknownMessage(0x50))
        ));
        assert!(bad(PIR_QUERY, &[]));
        assert!(bad(PIR_QUERY, &[7, 1, 0, 0, 0, 0, 0, 0, 0]));
        assert!(bad(PIR_QUERY, &[0, 2, 0, 0, 0, 1, 2, 3]));
        assert!(bad(PIR_QUERY, &[0, 1, 0, 0, 0, 1, 2, 3]));
        assert!(bad(SCORE_QUERY, &[0, 0, 0, 0, 2, 0, 0, 0, 1]));
        assert!(bad(SETUP_REQ, &[1, 2]));
    }

    #[test]
    fn oversized_setup_dimension_is_rejected() {
        let mut p = vec![0u8];
        p.extend_from_slice(&u64::MAX.to_le_bytes());
        p.extend_from_slice(&[0xff; 6]);
        assert!(Message::from_frame(&Frame::new(SETUP_RESP, p)).is_err());
        let mut zero = vec![0u8];
        zero.extend_from_slice(&0u64.to_le_bytes());
        zero.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(Message::from_frame(&Frame::new(SETUP_RESP, zero)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_payloads_never_panic(t in 0u8..=0x7f, payload in proptest::collection::vec(proptest::num::u8::ANY, 0..96)) {
            let _ = Message::from_frame(&Frame::new(t, payload));
        }
    }
}
