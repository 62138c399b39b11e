//! Secret-key LWE with linear homomorphism, used as a single-server PIR
//! primitive.
//!
//! The server holds a plaintext matrix `D` (`m x n`). The client encrypts a
//! vector `u` under a fresh key, the server returns `D * enc(u)`, and the
//! client strips the key-dependent term with the hint `D * A` and rounds:
//!
//! ```text
//! enc(u)_j = <A_j, s> + e_j + delta * u_j          (mod q)
//! ans_i    = sum_j D_ij * enc(u)_j
//! ans_i - <(D A)_i, s> = delta * (D u)_i + sum_j D_ij e_j
//! ```
//!
//! Decoding is exact whenever `|sum_j D_ij e_j| < delta / 2`, which
//! [`derive_params`] checks against the worst case.
//!
//! Reduction modulo `q` is native word wraparound: `u32` for the fetch
//! profile, `u64` for the wide-fetch and scoring profiles.

mod dispatch;
mod matrix;
mod params;
mod residue;
mod scheme;

use thiserror::Error;

pub use dispatch::{AnyHint, ClientMatrix, ColumnClient, Residues, ServedMatrix};
pub use matrix::{expand_matrix, PlainMatrix, PublicMatrix};
pub use params::{
    derive_fetch_params, derive_params, LweParams, Profile, DEFAULT_ERR_BOUND, DEFAULT_LWE_DIM,
    SCORING_MAX_MAGNITUDE,
};
pub use residue::{PlainEntry, Residue};
pub use scheme::{
    answer, compute_hint, decode_values, decrypt_raw, encrypt_vector, keygen, round_to_plain,
    PirAnswer, PirHint, PirQuery, SecretKey,
};

#[cfg(any(test, feature = "insecure-test"))]
pub use scheme::encrypt_vector_noiseless_insecure;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LweError {
    #[error(
        "correctness margin violated for {n_cols} columns: worst-case noise {worst_case_noise} >= {limit}"
    )]
    CorrectnessMarginViolated {
        n_cols: usize,
        worst_case_noise: u128,
        limit: u128,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plaintext entry {index} = {value} is not below p = {plain_mod}")]
    PlaintextOutOfRange {
        index: usize,
        value: u64,
        plain_mod: u64,
    },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("refusing an all-zero secret key")]
    InsecureKey,
}
