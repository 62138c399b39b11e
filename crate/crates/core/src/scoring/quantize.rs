use super::ScoringError;

pub const QUANT_SCALE: f32 = 127.0;

/// Largest absolute coordinate across all vectors; the public quantization
/// scale. Returns 1.0 for an all-zero corpus so the scale stays positive.
pub fn corpus_maxabs<'a>(vectors: impl IntoIterator<Item = &'a [f32]>) -> f32 {
    let m = vectors
        .into_iter()
        .flat_map(|v| v.iter())
        .fold(0f32, |acc, &x| acc.max(x.abs()));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// `q_i = clamp(round(v_i * 127 / maxabs), -127, 127)`.
pub fn quantize_embedding(v: &[f32], maxabs: f32) -> Result<Vec<i8>, ScoringError> {
    if !maxabs.is_finite() || maxabs <= 0.0 {
        return Err(ScoringError::InvalidScale(maxabs));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ScoringError::NonFiniteInput);
    }
    let scale = QUANT_SCALE as f64 / maxabs as f64;
    Ok(v.iter()
        .map(|&x| (x as f64 * scale).round().clamp(-127.0, 127.0) as i8)
        .collect())
}

pub fn dequantize(q: &[i8], maxabs: f32) -> Vec<f32> {
    q.iter()
        .map(|&x| x as f32 * maxabs / QUANT_SCALE)
        .collect()
}

/// Signed value to its representative in `[0, p)`.
pub fn encode_mod_p(x: i64, plain_mod: u64) -> u64 {
    x.rem_euclid(plain_mod as i64) as u64
}

/// Representative in `[0, p)` back to `[-p/2, p/2)`.
pub fn decode_centered(x: u64, plain_mod: u64) -> i64 {
    if x >= plain_mod / 2 {
        x as i64 - plain_mod as i64
    } else {
        x as i64
    }
}

/// Integer dot product of two quantized vectors.
pub fn quantized_dot(a: &[i8], b: &[i8]) -> i64 {
    a.iter().zip(b).map(|(&x, &y)| x as i64 * y as i64).sum()
}
