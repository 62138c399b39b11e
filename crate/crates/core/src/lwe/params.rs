use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::LweError;

/// Default secret dimension.
pub const DEFAULT_LWE_DIM: usize = 1024;
/// Support of the centered binomial error distribution (eta = 8).
pub const DEFAULT_ERR_BOUND: u32 = 8;
/// Largest magnitude of a signed 8-bit quantized value.
pub const SCORING_MAX_MAGNITUDE: u64 = 127;

/// Ciphertext word size and database-entry interpretation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Profile {
    /// 32-bit modulus, unsigned database entries in `[0, p)`.
    Fetch,
    /// 64-bit modulus, unsigned database entries. Used for column fetches
    /// whose column count breaks the 32-bit correctness margin.
    WideFetch,
    /// 64-bit modulus, signed 8-bit database entries.
    Scoring,
}

impl Profile {
    pub fn cipher_mod_bits(self) -> u32 {
        match self {
            Profile::Fetch => 32,
            Profile::WideFetch | Profile::Scoring => 64,
        }
    }

    pub fn residue_bytes(self) -> usize {
        (self.cipher_mod_bits() / 8) as usize
    }

    pub fn tag(self) -> u8 {
        match self {
            Profile::Fetch => 0,
            Profile::WideFetch => 1,
            Profile::Scoring => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Profile::Fetch),
            1 => Some(Profile::WideFetch),
            2 => Some(Profile::Scoring),
            _ => None,
        }
    }

    /// Largest absolute value a database entry can take once lifted.
    fn max_db_magnitude(self, plain_mod: u64) -> u64 {
        match self {
            Profile::Fetch | Profile::WideFetch => plain_mod - 1,
            Profile::Scoring => SCORING_MAX_MAGNITUDE,
        }
    }
}

/// Parameters of the secret-key LWE scheme for one served matrix.
///
/// `n_cols` is the column count of the matrix the parameters were derived
/// for; the correctness margin is a statement about that workload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LweParams {
    pub lwe_dim: usize,
    pub profile: Profile,
    pub plain_mod: u64,
    pub err_bound: u32,
    pub n_cols: usize,
    pub seed: [u8; 32],
}

impl LweParams {
    pub fn cipher_mod_bits(&self) -> u32 {
        self.profile.cipher_mod_bits()
    }

    /// Scaling factor `q / p`.
    pub fn delta(&self) -> u64 {
        1u64 << (self.cipher_mod_bits() - self.plain_mod.trailing_zeros())
    }

    /// Worst-case absolute decoding noise: `n_cols * max|D| * B`.
    pub fn worst_case_noise(&self) -> u128 {
        self.n_cols as u128
            * self.profile.max_db_magnitude(self.plain_mod) as u128
            * self.err_bound as u128
    }

    /// Same parameters with a different secret dimension. Correctness does not
    /// depend on it; tests use small dimensions for speed.
    pub fn with_lwe_dim(mut self, lwe_dim: usize) -> Self {
        self.lwe_dim = lwe_dim;
        self
    }

    /// Re-checks every invariant; used after deserialization.
    pub fn validate(&self) -> Result<(), LweError> {
        check_plain_mod(self.plain_mod, self.profile)?;
        if self.n_cols == 0 {
            return Err(LweError::InvalidParams("n_cols must be at least 1".into()));
        }
        if self.lwe_dim == 0 {
            return Err(LweError::InvalidParams("lwe_dim must be at least 1".into()));
        }
        if self.err_bound == 0 || self.err_bound > 64 {
            return Err(LweError::InvalidParams(format!(
                "err_bound {} outside 1..=64",
                self.err_bound
            )));
        }
        check_margin(self)
    }
}

fn check_plain_mod(plain_mod: u64, profile: Profile) -> Result<(), LweError> {
    if plain_mod < 2 || !plain_mod.is_power_of_two() {
        return Err(LweError::InvalidParams(format!(
            "plain_mod {plain_mod} is not a power of two >= 2"
        )));
    }
    if plain_mod.trailing_zeros() >= profile.cipher_mod_bits() {
        return Err(LweError::InvalidParams(format!(
            "plain_mod {plain_mod} must be below 2^{}",
            profile.cipher_mod_bits()
        )));
    }
    Ok(())
}

fn check_margin(params: &LweParams) -> Result<(), LweError> {
    let noise = params.worst_case_noise();
    let limit = params.delta() as u128 / 2;
    if noise >= limit {
        return Err(LweError::CorrectnessMarginViolated {
            n_cols: params.n_cols,
            worst_case_noise: noise,
            limit,
        });
    }
    if params.profile == Profile::Scoring {
        // Inner products of two signed 8-bit vectors must stay below p/2 to be
        // re-centered exactly.
        let max_score = params.n_cols as u128 * (SCORING_MAX_MAGNITUDE as u128).pow(2);
        let half_p = params.plain_mod as u128 / 2;
        if max_score >= half_p {
            return Err(LweError::CorrectnessMarginViolated {
                n_cols: params.n_cols,
                worst_case_noise: max_score,
                limit: half_p,
            });
        }
    }
    Ok(())
}

/// Derives parameters for a matrix with `n_cols` columns.
///
/// Fails with [`LweError::CorrectnessMarginViolated`] when the worst-case noise
/// reaches `delta / 2`. A fresh public seed is drawn unless one is supplied.
pub fn derive_params(
    n_cols: usize,
    plain_mod: u64,
    profile: Profile,
    seed: Option<[u8; 32]>,
) -> Result<LweParams, LweError> {
    if n_cols == 0 {
        return Err(LweError::InvalidParams("n_cols must be at least 1".into()));
    }
    check_plain_mod(plain_mod, profile)?;
    let seed = seed.unwrap_or_else(|| {
        let mut s = [0u8; 32];
        rand::rng().fill_bytes(&mut s);
        s
    });
    let params = LweParams {
        lwe_dim: DEFAULT_LWE_DIM,
        profile,
        plain_mod,
        err_bound: DEFAULT_ERR_BOUND,
        n_cols,
        seed,
    };
    check_margin(&params)?;
    Ok(params)
}

/// Byte-column fetch parameters: the 32-bit profile when its margin admits
/// `n_cols`, otherwise the 64-bit word.
pub fn derive_fetch_params(n_cols: usize, seed: Option<[u8; 32]>) -> Result<LweParams, LweError> {
    match derive_params(n_cols, 256, Profile::Fetch, seed) {
        Err(LweError::CorrectnessMarginViolated { .. }) => {
            derive_params(n_cols, 256, Profile::WideFetch, seed)
        }
        other => other,
    }
}
