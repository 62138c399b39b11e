use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::residue::dot;
use super::{LweError, LweParams, PlainEntry, PlainMatrix, Profile, PublicMatrix, Residue};

/// LWE secret: `lwe_dim` uniform residues.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey<R> {
    s: Vec<R>,
}

impl<R> std::fmt::Debug for SecretKey<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SecretKey(len={})", self.s.len())
    }
}

impl<R: Residue> SecretKey<R> {
    /// Wraps an externally produced secret. The all-zero vector is refused.
    pub fn from_residues(s: Vec<R>) -> Result<Self, LweError> {
        if s.iter().all(|&x| x == R::ZERO) {
            return Err(LweError::InsecureKey);
        }
        Ok(Self { s })
    }

    /// All-zero key. Decryption reduces to rounding `delta * m + e`.
    #[cfg(any(test, feature = "insecure-test"))]
    pub fn zero_insecure(lwe_dim: usize) -> Self {
        Self {
            s: vec![R::ZERO; lwe_dim],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.s
    }
}

/// An encrypted selector (or general plaintext) vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PirQuery<R> {
    pub profile: Profile,
    pub entries: Vec<R>,
}

/// The server's encrypted response, one residue per database row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PirAnswer<R> {
    pub entries: Vec<R>,
}

/// `D * A`, downloaded once so the client can strip the key-dependent term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PirHint<R> {
    pub h: PublicMatrix<R>,
}

impl<R: Residue> PirHint<R> {
    pub fn rows(&self) -> usize {
        self.h.rows()
    }
}

fn check_word<R: Residue>(params: &LweParams) -> Result<(), LweError> {
    if R::BITS != params.cipher_mod_bits() {
        return Err(LweError::InvalidParams(format!(
            "{}-bit residues used with a {}-bit profile",
            R::BITS,
            params.cipher_mod_bits()
        )));
    }
    Ok(())
}

fn uniform<R: Residue>(rng: &mut ChaCha20Rng) -> R {
    match R::BITS {
        32 => R::from_u64(rng.next_u32() as u64),
        _ => R::from_u64(rng.next_u64()),
    }
}

/// Centered binomial sample with eta = 8: popcount of 8 bits minus popcount
/// of 8 bits, supported on `[-8, 8]`.
fn centered_binomial(rng: &mut ChaCha20Rng) -> i64 {
    let x = rng.next_u32();
    (x & 0xff).count_ones() as i64 - ((x >> 8) & 0xff).count_ones() as i64
}

/// Samples a fresh secret key, deterministic in `rng_seed`.
pub fn keygen<R: Residue>(params: &LweParams, rng_seed: [u8; 32]) -> SecretKey<R> {
    let mut rng = ChaCha20Rng::from_seed(rng_seed);
    SecretKey {
        s: (0..params.lwe_dim).map(|_| uniform(&mut rng)).collect(),
    }
}

/// Encrypts `u` entrywise: `entry_j = <A_j, s> + e_j + delta * u_j`.
pub fn encrypt_vector<R: Residue>(
    params: &LweParams,
    sk: &SecretKey<R>,
    a: &PublicMatrix<R>,
    u: &[u64],
    rng_seed: [u8; 32],
) -> Result<PirQuery<R>, LweError> {
    encrypt_inner(params, sk, a, u, rng_seed, true)
}

/// Encryption with every error term forced to zero.
#[cfg(any(test, feature = "insecure-test"))]
pub fn encrypt_vector_noiseless_insecure<R: Residue>(
    params: &LweParams,
    sk: &SecretKey<R>,
    a: &PublicMatrix<R>,
    u: &[u64],
) -> Result<PirQuery<R>, LweError> {
    encrypt_inner(params, sk, a, u, [0u8; 32], false)
}

fn encrypt_inner<R: Residue>(
    params: &LweParams,
    sk: &SecretKey<R>,
    a: &PublicMatrix<R>,
    u: &[u64],
    rng_seed: [u8; 32],
    with_noise: bool,
) -> Result<PirQuery<R>, LweError> {
    check_word::<R>(params)?;
    if a.rows() != u.len() {
        return Err(LweError::DimensionMismatch {
            what: "public matrix rows vs plaintext length",
            expected: a.rows(),
            found: u.len(),
        });
    }
    if a.cols() != params.lwe_dim || sk.len() != params.lwe_dim {
        return Err(LweError::DimensionMismatch {
            what: "secret dimension",
            expected: params.lwe_dim,
            found: if a.cols() != params.lwe_dim { a.cols() } else { sk.len() },
        });
    }
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, &v)| v >= params.plain_mod) {
        return Err(LweError::PlaintextOutOfRange {
            index,
            value,
            plain_mod: params.plain_mod,
        });
    }

    let mut rng = ChaCha20Rng::from_seed(rng_seed);
    let errors: Vec<i64> = if with_noise {
        (0..u.len()).map(|_| centered_binomial(&mut rng)).collect()
    } else {
        vec![0; u.len()]
    };
    let delta = R::from_u64(params.delta());
    let s = sk.as_slice();
    let entries = (0..u.len())
        .into_par_iter()
        .map(|j| {
            dot(a.row(j), s)
                .wadd(R::from_i64(errors[j]))
                .wadd(delta.wmul(R::from_u64(u[j])))
        })
        .collect();
    Ok(PirQuery {
        profile: params.profile,
        entries,
    })
}

/// `D * A` over the residue ring.
pub fn compute_hint<E: PlainEntry, R: Residue>(
    d: &PlainMatrix<E>,
    a: &PublicMatrix<R>,
) -> Result<PirHint<R>, LweError> {
    if d.cols() != a.rows() {
        return Err(LweError::DimensionMismatch {
            what: "database columns vs public matrix rows",
            expected: a.rows(),
            found: d.cols(),
        });
    }
    let width = a.cols();
    let mut h = vec![R::ZERO; d.rows() * width];
    if width > 0 {
        h.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
            for (j, &entry) in d.row(i).iter().enumerate() {
                let v: R = entry.lift();
                if v == R::ZERO {
                    continue;
                }
                for (o, &x) in out.iter_mut().zip(a.row(j)) {
                    *o = o.wadd(x.wmul(v));
                }
            }
        });
    }
    Ok(PirHint {
        h: PublicMatrix::from_row_major(d.rows(), width, h)?,
    })
}

/// The server's online work: `D * q` over the residue ring.
pub fn answer<E: PlainEntry, R: Residue>(
    d: &PlainMatrix<E>,
    q: &PirQuery<R>,
) -> Result<PirAnswer<R>, LweError> {
    if q.entries.len() != d.cols() {
        return Err(LweError::DimensionMismatch {
            what: "query length vs database columns",
            expected: d.cols(),
            found: q.entries.len(),
        });
    }
    let qe = &q.entries;
    let entries = (0..d.rows())
        .into_par_iter()
        .map(|i| {
            d.row(i)
                .iter()
                .zip(qe)
                .fold(R::ZERO, |acc, (&x, &y)| acc.wadd(x.lift::<R>().wmul(y)))
        })
        .collect();
    Ok(PirAnswer { entries })
}

/// `ans_i - <hint_i, s>` for every row: `delta * (D u)_i` plus noise.
pub fn decrypt_raw<R: Residue>(
    ans: &PirAnswer<R>,
    hint: &PirHint<R>,
    sk: &SecretKey<R>,
) -> Result<Vec<R>, LweError> {
    if ans.entries.len() != hint.rows() {
        return Err(LweError::DimensionMismatch {
            what: "answer length vs hint rows",
            expected: hint.rows(),
            found: ans.entries.len(),
        });
    }
    if hint.h.cols() != sk.len() {
        return Err(LweError::DimensionMismatch {
            what: "hint width vs secret dimension",
            expected: sk.len(),
            found: hint.h.cols(),
        });
    }
    let s = sk.as_slice();
    Ok(ans
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, &v)| v.wsub(dot(hint.h.row(i), s)))
        .collect())
}

/// Rounds a raw residue to the nearest multiple of delta (ties up), mod p.
pub fn round_to_plain<R: Residue>(raw: R, params: &LweParams) -> u64 {
    let delta = params.delta();
    let shift = delta.trailing_zeros();
    let shifted = raw.wadd(R::from_u64(delta / 2)).to_u64();
    (shifted >> shift) & (params.plain_mod - 1)
}

/// Decrypts and decodes an answer into `Z_p` values.
pub fn decode_values<R: Residue>(
    ans: &PirAnswer<R>,
    hint: &PirHint<R>,
    sk: &SecretKey<R>,
    params: &LweParams,
) -> Result<Vec<u64>, LweError> {
    check_word::<R>(params)?;
    Ok(decrypt_raw(ans, hint, sk)?
        .into_iter()
        .map(|raw| round_to_plain(raw, params))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lwe::{derive_params, expand_matrix};

    fn params(n_cols: usize, dim: usize) -> LweParams {
        derive_params(n_cols, 256, Profile::Fetch, Some([3u8; 32]))
            .unwrap()
            .with_lwe_dim(dim)
    }

    fn rng_seed(i: u64) -> [u8; 32] {
        let mut s = [0u8; 32];
        s[..8].copy_from_slice(&i.to_le_bytes());
        s
    }

    fn naive_matmul(d: &PlainMatrix<u8>, a: &PublicMatrix<u32>) -> Vec<u32> {
        let mut out = vec![0u32; d.rows() * a.cols()];
        for i in 0..d.rows() {
            for k in 0..a.cols() {
                let mut acc = 0u32;
                for j in 0..d.cols() {
                    acc = acc.wrapping_add((d.get(i, j) as u32).wrapping_mul(a.row(j)[k]));
                }
                out[i * a.cols() + k] = acc;
            }
        }
        out
    }

    #[test]
    fn keygen_deterministic_and_sized() {
        let p = params(4, 4);
        let a: SecretKey<u32> = keygen(&p, rng_seed(1));
        let b: SecretKey<u32> = keygen(&p, rng_seed(1));
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        let p = params(4, 64);
        for i in 0..100 {
            let x: SecretKey<u32> = keygen(&p, rng_seed(2 * i));
            let y: SecretKey<u32> = keygen(&p, rng_seed(2 * i + 1));
            assert_ne!(x, y);
        }
    }

    #[test]
    fn zero_key_is_refused_by_production_constructor() {
        assert!(matches!(
            SecretKey::<u32>::from_residues(vec![0; 8]),
            Err(LweError::InsecureKey)
        ));
        assert!(SecretKey::<u32>::from_residues(vec![0, 1]).is_ok());
    }

    #[test]
    fn noiseless_zero_key_encrypts_to_scaled_plaintext() {
        let p = params(5, 8);
        let a = expand_matrix::<u32>(&p.seed, 5, 8);
        let sk = SecretKey::zero_insecure(8);
        let u = [0, 1, 2, 255, 17];
        let q = encrypt_vector_noiseless_insecure(&p, &sk, &a, &u).unwrap();
        let expect: Vec<u32> = u.iter().map(|&x| (x as u32) << 24).collect();
        assert_eq!(q.entries, expect);
    }

    #[test]
    fn zero_plaintext_decrypts_to_zero() {
        let p = params(6, 16);
        let a = expand_matrix::<u32>(&p.seed, 6, 16);
        let sk = keygen(&p, rng_seed(5));
        let q = encrypt_vector(&p, &sk, &a, &[0; 6], rng_seed(6)).unwrap();
        // Decrypt each entry on its own via the identity database.
        let d = PlainMatrix::<u8>::identity(6);
        let hint = compute_hint(&d, &a).unwrap();
        let ans = answer(&d, &q).unwrap();
        assert_eq!(decode_values(&ans, &hint, &sk, &p).unwrap(), vec![0; 6]);
    }

    #[test]
    fn plaintext_out_of_range_rejected() {
        let p = params(2, 4);
        let a = expand_matrix::<u32>(&p.seed, 2, 4);
        let sk = keygen(&p, rng_seed(1));
        let err = encrypt_vector(&p, &sk, &a, &[3, 256], rng_seed(2)).unwrap_err();
        assert!(matches!(
            err,
            LweError::PlaintextOutOfRange { index: 1, value: 256, .. }
        ));
    }

    #[test]
    fn word_size_must_match_profile() {
        let p = params(2, 4);
        let a = expand_matrix::<u64>(&p.seed, 2, 4);
        let sk: SecretKey<u64> = keygen(&p, rng_seed(1));
        assert!(matches!(
            encrypt_vector(&p, &sk, &a, &[0, 0], rng_seed(2)),
            Err(LweError::InvalidParams(_))
        ));
    }

    #[test]
    fn random_vector_roundtrip_tiny_params() {
        use rand::Rng;
        let p = params(10, 4);
        let a = expand_matrix::<u32>(&p.seed, 10, 4);
        let d = PlainMatrix::<u8>::identity(10);
        let hint = compute_hint(&d, &a).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for t in 0..50 {
            let u: Vec<u64> = (0..10).map(|_| rng.random_range(0..256)).collect();
            let sk = keygen(&p, rng_seed(100 + t));
            let q = encrypt_vector(&p, &sk, &a, &u, rng_seed(200 + t)).unwrap();
            let ans = answer(&d, &q).unwrap();
            assert_eq!(decode_values(&ans, &hint, &sk, &p).unwrap(), u);
        }
    }

    #[test]
    fn hint_zero_identity_and_naive() {
        let a = expand_matrix::<u32>(&[1u8; 32], 5, 7);
        let zero = PlainMatrix::<u8>::zeros(4, 5);
        assert!(compute_hint(&zero, &a)
            .unwrap()
            .h
            .as_slice()
            .iter()
            .all(|&x| x == 0));

        let a3 = expand_matrix::<u32>(&[2u8; 32], 3, 7);
        let id = PlainMatrix::<u8>::identity(3);
        assert_eq!(compute_hint(&id, &a3).unwrap().h.as_slice(), a3.as_slice());

        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let data: Vec<u8> = (0..20).map(|_| rng.next_u32() as u8).collect();
        let d = PlainMatrix::from_row_major(4, 5, data).unwrap();
        assert_eq!(compute_hint(&d, &a).unwrap().h.as_slice(), &naive_matmul(&d, &a)[..]);
    }

    #[test]
    fn hint_dimension_mismatch() {
        let a = expand_matrix::<u32>(&[1u8; 32], 5, 7);
        let d = PlainMatrix::<u8>::zeros(4, 4);
        assert!(matches!(
            compute_hint(&d, &a),
            Err(LweError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn answer_examples() {
        let id = PlainMatrix::<u8>::identity(3);
        let q = PirQuery {
            profile: Profile::Fetch,
            entries: vec![9u32, u32::MAX, 4],
        };
        assert_eq!(answer(&id, &q).unwrap().entries, q.entries);

        let d = PlainMatrix::from_row_major(2, 2, vec![1u8, 2, 3, 4]).unwrap();
        let q = PirQuery {
            profile: Profile::Fetch,
            entries: vec![5u32, 6],
        };
        assert_eq!(answer(&d, &q).unwrap().entries, vec![17, 39]);

        let z = PlainMatrix::<u8>::zeros(3, 2);
        assert_eq!(answer(&z, &q).unwrap().entries, vec![0, 0, 0]);

        let bad = PirQuery {
            profile: Profile::Fetch,
            entries: vec![1u32],
        };
        assert!(answer(&d, &bad).is_err());
    }

    #[test]
    fn selector_extracts_column() {
        let p = params(8, 32);
        let a = expand_matrix::<u32>(&p.seed, 8, 32);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let data: Vec<u8> = (0..16 * 8).map(|_| rng.next_u32() as u8).collect();
        let d = PlainMatrix::from_row_major(16, 8, data).unwrap();
        let hint = compute_hint(&d, &a).unwrap();
        for t in 0..1000u64 {
            let sel = (t % 8) as usize;
            let mut u = vec![0u64; 8];
            u[sel] = 1;
            let sk = keygen(&p, rng_seed(t));
            let q = encrypt_vector(&p, &sk, &a, &u, rng_seed(t + 5000)).unwrap();
            let out = decode_values(&answer(&d, &q).unwrap(), &hint, &sk, &p).unwrap();
            let col: Vec<u64> = d.column(sel).into_iter().map(u64::from).collect();
            assert_eq!(out, col);
        }
    }

    #[test]
    fn noiseless_zero_key_decodes_exactly() {
        let p = params(3, 4);
        let a = expand_matrix::<u32>(&p.seed, 3, 4);
        let d = PlainMatrix::from_row_major(2, 3, vec![10u8, 20, 30, 1, 2, 3]).unwrap();
        let hint = compute_hint(&d, &a).unwrap();
        let sk = SecretKey::zero_insecure(4);
        let q = encrypt_vector_noiseless_insecure(&p, &sk, &a, &[1, 2, 3]).unwrap();
        let ans = answer(&d, &q).unwrap();
        let raw = decrypt_raw(&ans, &hint, &sk).unwrap();
        assert_eq!(raw, vec![140u32 << 24, 14u32 << 24]);
        assert_eq!(decode_values(&ans, &hint, &sk, &p).unwrap(), vec![140, 14]);
    }

    #[test]
    fn max_plaintext_survives_boundary_noise() {
        let p = params(1, 4);
        let delta = p.delta() as i64;
        let a = expand_matrix::<u32>(&p.seed, 1, 4);
        let d = PlainMatrix::from_row_major(1, 1, vec![255u8]).unwrap();
        let hint = compute_hint(&d, &a).unwrap();
        let sk: SecretKey<u32> = keygen(&p, rng_seed(8));
        let mask = dot(hint.h.row(0), sk.as_slice());
        for noise in [delta / 2 - 1, -(delta / 2), 0, 1, -1] {
            let entry = mask
                .wadd(((255i64 * delta) as u64) as u32)
                .wadd(noise as u32);
            let ans = PirAnswer {
                entries: vec![entry],
            };
            assert_eq!(
                decode_values(&ans, &hint, &sk, &p).unwrap(),
                vec![255],
                "noise {noise}"
            );
        }
        // One past the margin flips to the next value (ties round up).
        let ans = PirAnswer {
            entries: vec![mask.wadd(((255i64 * delta) as u64) as u32).wadd((delta / 2) as u32)],
        };
        assert_eq!(decode_values(&ans, &hint, &sk, &p).unwrap(), vec![0]);
    }

    #[test]
    fn scoring_profile_signed_linearity() {
        let p = derive_params(4, 1 << 26, Profile::Scoring, Some([5u8; 32]))
            .unwrap()
            .with_lwe_dim(16);
        let a = expand_matrix::<u64>(&p.seed, 4, 16);
        let d = PlainMatrix::from_row_major(2, 4, vec![-127i8, 5, 0, 127, 3, -3, 2, -1]).unwrap();
        let hint = compute_hint(&d, &a).unwrap();
        let u_signed = [-127i64, 100, -1, 127];
        let u: Vec<u64> = u_signed
            .iter()
            .map(|&x| x.rem_euclid(1 << 26) as u64)
            .collect();
        let sk = keygen(&p, rng_seed(1));
        let q = encrypt_vector(&p, &sk, &a, &u, rng_seed(2)).unwrap();
        let out = decode_values(&answer(&d, &q).unwrap(), &hint, &sk, &p).unwrap();
        let expect: Vec<u64> = (0..2)
            .map(|i| {
                let s: i64 = (0..4).map(|j| d.get(i, j) as i64 * u_signed[j]).sum();
                s.rem_euclid(1 << 26) as u64
            })
            .collect();
        assert_eq!(out, expect);
    }
}
