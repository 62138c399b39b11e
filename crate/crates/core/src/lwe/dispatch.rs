//! Word-size dispatch: the wire and the index carry residues whose width is
//! fixed by each matrix's profile, so callers above this module deal in
//! [`Residues`] rather than a generic parameter.

use super::scheme::{answer, compute_hint, decode_values, encrypt_vector, keygen};
use super::{
    expand_matrix, LweError, LweParams, PirAnswer, PirHint, PirQuery, PlainEntry, PlainMatrix,
    PublicMatrix, Residue, SecretKey,
};

/// A residue vector of either word size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Residues {
    W32(Vec<u32>),
    W64(Vec<u64>),
}

impl Residues {
    pub fn len(&self) -> usize {
        match self {
            Residues::W32(v) => v.len(),
            Residues::W64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        match self {
            Residues::W32(_) => 4,
            Residues::W64(_) => 8,
        }
    }

    pub fn byte_len(&self) -> usize {
        self.len() * self.width()
    }

    pub fn write_le(&self, out: &mut Vec<u8>) {
        match self {
            Residues::W32(v) => v.iter().for_each(|x| x.write_le(out)),
            Residues::W64(v) => v.iter().for_each(|x| x.write_le(out)),
        }
    }

    /// Parses `count` residues of `width` bytes. `bytes` must hold exactly
    /// `count * width` bytes.
    pub fn read_le(bytes: &[u8], width: usize, count: usize) -> Option<Self> {
        if bytes.len() != count.checked_mul(width)? {
            return None;
        }
        match width {
            4 => Some(Residues::W32(bytes.chunks_exact(4).map(u32::read_le).collect())),
            8 => Some(Residues::W64(bytes.chunks_exact(8).map(u64::read_le).collect())),
            _ => None,
        }
    }
}

/// A hint of either word size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyHint {
    W32(PirHint<u32>),
    W64(PirHint<u64>),
}

impl AnyHint {
    pub fn rows(&self) -> usize {
        match self {
            AnyHint::W32(h) => h.rows(),
            AnyHint::W64(h) => h.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            AnyHint::W32(h) => h.h.cols(),
            AnyHint::W64(h) => h.h.cols(),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            AnyHint::W32(_) => 4,
            AnyHint::W64(_) => 8,
        }
    }

    pub fn byte_len(&self) -> usize {
        self.rows() * self.cols() * self.width()
    }

    pub fn write_le(&self, out: &mut Vec<u8>) {
        out.reserve(self.byte_len());
        match self {
            AnyHint::W32(h) => h.h.as_slice().iter().for_each(|x| x.write_le(out)),
            AnyHint::W64(h) => h.h.as_slice().iter().for_each(|x| x.write_le(out)),
        }
    }

    pub fn read_le(bytes: &[u8], width: usize, rows: usize, cols: usize) -> Option<Self> {
        let count = rows.checked_mul(cols)?;
        match Residues::read_le(bytes, width, count)? {
            Residues::W32(v) => Some(AnyHint::W32(PirHint {
                h: PublicMatrix::from_row_major(rows, cols, v).ok()?,
            })),
            Residues::W64(v) => Some(AnyHint::W64(PirHint {
                h: PublicMatrix::from_row_major(rows, cols, v).ok()?,
            })),
        }
    }
}

/// A plaintext matrix viewed together with the parameters it is served under.
#[derive(Debug, Clone, Copy)]
pub struct ServedMatrix<'a, E> {
    pub params: &'a LweParams,
    pub data: &'a PlainMatrix<E>,
}

impl<'a, E: PlainEntry> ServedMatrix<'a, E> {
    pub fn new(params: &'a LweParams, data: &'a PlainMatrix<E>) -> Result<Self, LweError> {
        if data.cols() != params.n_cols {
            return Err(LweError::DimensionMismatch {
                what: "matrix columns vs params.n_cols",
                expected: params.n_cols,
                found: data.cols(),
            });
        }
        Ok(Self { params, data })
    }

    pub fn compute_hint(&self) -> Result<AnyHint, LweError> {
        let (n, dim) = (self.params.n_cols, self.params.lwe_dim);
        match self.params.cipher_mod_bits() {
            32 => Ok(AnyHint::W32(compute_hint(
                self.data,
                &expand_matrix::<u32>(&self.params.seed, n, dim),
            )?)),
            _ => Ok(AnyHint::W64(compute_hint(
                self.data,
                &expand_matrix::<u64>(&self.params.seed, n, dim),
            )?)),
        }
    }

    /// Homomorphic matrix-vector product over an encrypted vector.
    pub fn answer(&self, query: &Residues) -> Result<Residues, LweError> {
        let profile = self.params.profile;
        match (query, self.params.cipher_mod_bits()) {
            (Residues::W32(entries), 32) => {
                let q = PirQuery {
                    profile,
                    entries: entries.clone(),
                };
                Ok(Residues::W32(answer(self.data, &q)?.entries))
            }
            (Residues::W64(entries), 64) => {
                let q = PirQuery {
                    profile,
                    entries: entries.clone(),
                };
                Ok(Residues::W64(answer(self.data, &q)?.entries))
            }
            (q, bits) => Err(LweError::InvalidParams(format!(
                "{}-byte residues sent to a {bits}-bit matrix",
                q.width()
            ))),
        }
    }

    pub fn answer_bytes(&self) -> usize {
        self.data.rows() * self.params.profile.residue_bytes()
    }
}

/// Client-side view of one served matrix: parameters, expanded `A`, hint.
#[derive(Debug, Clone)]
pub struct ClientMatrix<R> {
    params: LweParams,
    a: PublicMatrix<R>,
    hint: PirHint<R>,
}

impl<R: Residue> ClientMatrix<R> {
    pub fn new(params: LweParams, hint: PirHint<R>) -> Result<Self, LweError> {
        if hint.h.cols() != params.lwe_dim {
            return Err(LweError::DimensionMismatch {
                what: "hint width vs lwe_dim",
                expected: params.lwe_dim,
                found: hint.h.cols(),
            });
        }
        let a = expand_matrix(&params.seed, params.n_cols, params.lwe_dim);
        Ok(Self { params, a, hint })
    }

    fn encrypt(
        &self,
        u: &[u64],
        key_seed: [u8; 32],
        noise_seed: [u8; 32],
    ) -> Result<(SecretKey<R>, Vec<R>), LweError> {
        let sk = keygen::<R>(&self.params, key_seed);
        let q = encrypt_vector(&self.params, &sk, &self.a, u, noise_seed)?;
        Ok((sk, q.entries))
    }

    fn decode(&self, sk: &SecretKey<R>, entries: Vec<R>) -> Result<Vec<u64>, LweError> {
        decode_values(&PirAnswer { entries }, &self.hint, sk, &self.params)
    }
}

/// Per-query secret, kept opaque to callers above this module.
pub struct QueryKey(KeyInner);

enum KeyInner {
    W32(SecretKey<u32>),
    W64(SecretKey<u64>),
}

/// Word-dispatched [`ClientMatrix`].
#[derive(Debug, Clone)]
pub enum ColumnClient {
    W32(ClientMatrix<u32>),
    W64(ClientMatrix<u64>),
}

impl ColumnClient {
    pub fn new(params: LweParams, hint: AnyHint) -> Result<Self, LweError> {
        match (params.cipher_mod_bits(), hint) {
            (32, AnyHint::W32(h)) => Ok(ColumnClient::W32(ClientMatrix::new(params, h)?)),
            (64, AnyHint::W64(h)) => Ok(ColumnClient::W64(ClientMatrix::new(params, h)?)),
            (bits, h) => Err(LweError::InvalidParams(format!(
                "{}-byte hint for a {bits}-bit profile",
                h.width()
            ))),
        }
    }

    pub fn params(&self) -> &LweParams {
        match self {
            ColumnClient::W32(c) => &c.params,
            ColumnClient::W64(c) => &c.params,
        }
    }

    pub fn n_cols(&self) -> usize {
        self.params().n_cols
    }

    pub fn n_rows(&self) -> usize {
        match self {
            ColumnClient::W32(c) => c.hint.rows(),
            ColumnClient::W64(c) => c.hint.rows(),
        }
    }

    /// Encrypts `u` under a fresh key derived from `key_seed`.
    pub fn encrypt(
        &self,
        u: &[u64],
        key_seed: [u8; 32],
        noise_seed: [u8; 32],
    ) -> Result<(QueryKey, Residues), LweError> {
        match self {
            ColumnClient::W32(c) => {
                let (sk, q) = c.encrypt(u, key_seed, noise_seed)?;
                Ok((QueryKey(KeyInner::W32(sk)), Residues::W32(q)))
            }
            ColumnClient::W64(c) => {
                let (sk, q) = c.encrypt(u, key_seed, noise_seed)?;
                Ok((QueryKey(KeyInner::W64(sk)), Residues::W64(q)))
            }
        }
    }

    /// Encrypts the one-hot selector for `col`.
    pub fn encrypt_selector(
        &self,
        col: usize,
        key_seed: [u8; 32],
        noise_seed: [u8; 32],
    ) -> Result<(QueryKey, Residues), LweError> {
        let n = self.n_cols();
        if col >= n {
            return Err(LweError::DimensionMismatch {
                what: "selector index vs column count",
                expected: n,
                found: col,
            });
        }
        let mut u = vec![0u64; n];
        u[col] = 1;
        self.encrypt(&u, key_seed, noise_seed)
    }

    pub fn decode(&self, key: &QueryKey, answer: Residues) -> Result<Vec<u64>, LweError> {
        match (self, &key.0, answer) {
            (ColumnClient::W32(c), KeyInner::W32(sk), Residues::W32(a)) => c.decode(sk, a),
            (ColumnClient::W64(c), KeyInner::W64(sk), Residues::W64(a)) => c.decode(sk, a),
            (_, _, a) => Err(LweError::InvalidParams(format!(
                "answer with {}-byte residues does not match the matrix profile",
                a.width()
            ))),
        }
    }
}
