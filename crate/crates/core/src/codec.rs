//! Little-endian byte codec shared by the index file and the wire protocol.

use thiserror::Error;

use crate::lwe::{AnyHint, LweParams, PlainMatrix, Profile, Residues};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("invalid encoding: {0}")]
    Invalid(String),
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            buf: Vec::with_capacity(n),
        }
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn len_u64(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    pub fn f32s(&mut self, v: &[f32]) {
        self.buf.reserve(v.len() * 4);
        v.iter().for_each(|&x| self.f32(x));
    }

    pub fn params(&mut self, p: &LweParams) {
        self.u32(p.lwe_dim as u32);
        self.u8(p.profile.tag());
        self.u64(p.plain_mod);
        self.u32(p.err_bound);
        self.u64(p.n_cols as u64);
        self.bytes(&p.seed);
    }

    pub fn hint(&mut self, h: &AnyHint) {
        self.len_u64(h.rows());
        self.len_u64(h.cols());
        self.u8(h.width() as u8);
        let mut out = std::mem::take(&mut self.buf);
        h.write_le(&mut out);
        self.buf = out;
    }

    pub fn residues(&mut self, r: &Residues) {
        r.write_le(&mut self.buf);
    }

    pub fn u8_matrix(&mut self, m: &PlainMatrix<u8>) {
        self.len_u64(m.rows());
        self.len_u64(m.cols());
        self.bytes(m.as_slice());
    }

    pub fn i8_matrix(&mut self, m: &PlainMatrix<i8>) {
        self.len_u64(m.rows());
        self.len_u64(m.cols());
        self.buf.extend(m.as_slice().iter().map(|&x| x as u8));
    }
}

#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_exhausted(&self) -> bool {
        self.remaining() == 0
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.buf[self.pos..];
        self.pos = self.buf.len();
        s
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let mut a = [0u8; N];
        a.copy_from_slice(self.take(N)?);
        Ok(a)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    /// A `u64` length that must fit in memory and in what is left to read,
    /// given each element occupies at least `elem_bytes`.
    pub fn len_u64(&mut self, elem_bytes: usize) -> Result<usize, CodecError> {
        let offset = self.pos;
        let v = self.u64()?;
        let n = usize::try_from(v).map_err(|_| CodecError::Invalid(format!("length {v}")))?;
        let need = n.saturating_mul(elem_bytes);
        if need > self.remaining() {
            return Err(CodecError::Truncated {
                offset,
                needed: need - self.remaining(),
            });
        }
        Ok(n)
    }

    pub fn f32(&mut self) -> Result<f32, CodecError> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CodecError> {
        let raw = self.take(n.checked_mul(4).ok_or_else(overflow)?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn params(&mut self) -> Result<LweParams, CodecError> {
        let lwe_dim = self.u32()? as usize;
        let tag = self.u8()?;
        let profile = Profile::from_tag(tag)
            .ok_or_else(|| CodecError::Invalid(format!("profile tag {tag}")))?;
        let plain_mod = self.u64()?;
        let err_bound = self.u32()?;
        let n_cols = self.u64()? as usize;
        let seed = self.array::<32>()?;
        let p = LweParams {
            lwe_dim,
            profile,
            plain_mod,
            err_bound,
            n_cols,
            seed,
        };
        p.validate()
            .map_err(|e| CodecError::Invalid(e.to_string()))?;
        Ok(p)
    }

    pub fn hint(&mut self) -> Result<AnyHint, CodecError> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        let width = self.u8()? as usize;
        if width != 4 && width != 8 {
            return Err(CodecError::Invalid(format!("residue width {width}")));
        }
        let n = rows
            .checked_mul(cols)
            .and_then(|x| x.checked_mul(width))
            .ok_or_else(overflow)?;
        let raw = self.take(n)?;
        AnyHint::read_le(raw, width, rows, cols)
            .ok_or_else(|| CodecError::Invalid("hint layout".into()))
    }

    pub fn residues(&mut self, width: usize, count: usize) -> Result<Residues, CodecError> {
        let raw = self.take(count.checked_mul(width).ok_or_else(overflow)?)?;
        Residues::read_le(raw, width, count)
            .ok_or_else(|| CodecError::Invalid(format!("residue width {width}")))
    }

    pub fn u8_matrix(&mut self) -> Result<PlainMatrix<u8>, CodecError> {
        let (rows, cols) = self.dims()?;
        let data = self.take(rows * cols)?.to_vec();
        PlainMatrix::from_row_major(rows, cols, data).map_err(|e| CodecError::Invalid(e.to_string()))
    }

    pub fn i8_matrix(&mut self) -> Result<PlainMatrix<i8>, CodecError> {
        let (rows, cols) = self.dims()?;
        let data = self.take(rows * cols)?.iter().map(|&x| x as i8).collect();
        PlainMatrix::from_row_major(rows, cols, data).map_err(|e| CodecError::Invalid(e.to_string()))
    }

    fn dims(&mut self) -> Result<(usize, usize), CodecError> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        rows.checked_mul(cols).ok_or_else(overflow)?;
        Ok((rows, cols))
    }
}

fn overflow() -> CodecError {
    CodecError::Invalid("length overflow".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalars_roundtrip() {
        let mut w = Writer::new();
        w.u8(1);
        w.u16(0x0203);
        w.u32(7);
        w.u64(u64::MAX);
        w.f32(-1.5);
        w.f64(2.25);
        let b = w.into_bytes();
        assert_eq!(&b[1..3], &[3, 2]);
        let mut r = Reader::new(&b);
        assert_eq!(r.u8().unwrap(), 1);
        assert_eq!(r.u16().unwrap(), 0x0203);
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.u64().unwrap(), u64::MAX);
        assert_eq!(r.f32().unwrap(), -1.5);
        assert_eq!(r.f64().unwrap(), 2.25);
        assert!(r.is_exhausted());
        assert!(matches!(r.u8(), Err(CodecError::Truncated { .. })));
    }

    #[test]
    fn absurd_lengths_are_truncation_not_allocation() {
        let mut w = Writer::new();
        w.u64(u64::MAX / 2);
        let b = w.into_bytes();
        let mut r = Reader::new(&b);
        assert!(r.len_u64(8).is_err());
    }

    #[test]
    fn params_roundtrip_and_validation() {
        let p = crate::lwe::derive_params(10, 256, Profile::Fetch, Some([9; 32])).unwrap();
        let mut w = Writer::new();
        w.params(&p);
        let b = w.into_bytes();
        assert_eq!(Reader::new(&b).params().unwrap(), p);
        let mut bad = b.clone();
        bad[4] = 9; // profile tag
        assert!(Reader::new(&bad).params().is_err());
    }
}
