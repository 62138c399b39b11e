use std::fmt::Debug;

/// A ciphertext residue: an unsigned machine word whose wraparound arithmetic
/// *is* reduction modulo the ciphertext modulus.
pub trait Residue: Copy + Default + Eq + Debug + Send + Sync + 'static {
    const BITS: u32;
    const BYTES: usize;
    const ZERO: Self;

    /// Truncating conversion.
    fn from_u64(v: u64) -> Self;
    /// Two's-complement conversion, so `-1` maps to `q - 1`.
    fn from_i64(v: i64) -> Self;
    fn to_u64(self) -> u64;
    fn wadd(self, rhs: Self) -> Self;
    fn wsub(self, rhs: Self) -> Self;
    fn wmul(self, rhs: Self) -> Self;
    fn write_le(self, out: &mut Vec<u8>);
    /// Reads exactly `Self::BYTES` bytes. Caller guarantees the length.
    fn read_le(bytes: &[u8]) -> Self;

    /// Interprets the residue as a centered value in `[-q/2, q/2)`.
    fn centered(self) -> i128 {
        let v = self.to_u64() as i128;
        let q = 1i128 << Self::BITS;
        if v >= q / 2 {
            v - q
        } else {
            v
        }
    }
}

macro_rules! impl_residue {
    ($t:ty) => {
        impl Residue for $t {
            const BITS: u32 = <$t>::BITS;
            const BYTES: usize = std::mem::size_of::<$t>();
            const ZERO: Self = 0;

            #[inline(always)]
            fn from_u64(v: u64) -> Self {
                v as $t
            }
            #[inline(always)]
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            #[inline(always)]
            fn to_u64(self) -> u64 {
                self as u64
            }
            #[inline(always)]
            fn wadd(self, rhs: Self) -> Self {
                self.wrapping_add(rhs)
            }
            #[inline(always)]
            fn wsub(self, rhs: Self) -> Self {
                self.wrapping_sub(rhs)
            }
            #[inline(always)]
            fn wmul(self, rhs: Self) -> Self {
                self.wrapping_mul(rhs)
            }
            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn read_le(bytes: &[u8]) -> Self {
                let mut buf = [0u8; std::mem::size_of::<$t>()];
                buf.copy_from_slice(&bytes[..std::mem::size_of::<$t>()]);
                <$t>::from_le_bytes(buf)
            }
        }
    };
}

impl_residue!(u32);
impl_residue!(u64);

/// A plaintext database entry and how it is lifted into the residue ring.
pub trait PlainEntry: Copy + Default + Send + Sync + 'static {
    fn lift<R: Residue>(self) -> R;
}

/// Unsigned bytes (fetch profiles): zero extension.
impl PlainEntry for u8 {
    #[inline(always)]
    fn lift<R: Residue>(self) -> R {
        R::from_u64(self as u64)
    }
}

/// Signed bytes (scoring profile): sign extension, so noise stays bounded by
/// the magnitude of the entry rather than its representative mod p.
impl PlainEntry for i8 {
    #[inline(always)]
    fn lift<R: Residue>(self) -> R {
        R::from_i64(self as i64)
    }
}

/// Dot product over the residue ring.
#[inline]
pub(crate) fn dot<R: Residue>(a: &[R], b: &[R]) -> R {
    a.iter()
        .zip(b)
        .fold(R::ZERO, |acc, (&x, &y)| acc.wadd(x.wmul(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wraparound_is_modular() {
        assert_eq!(u32::MAX.wadd(2), 1);
        assert_eq!(0u64.wsub(1), u64::MAX);
        assert_eq!(u32::from_i64(-1), u32::MAX);
    }

    #[test]
    fn centered_interpretation() {
        assert_eq!(u32::MAX.centered(), -1);
        assert_eq!((1u32 << 31).centered(), -(1i128 << 31));
        assert_eq!(((1u32 << 31) - 1).centered(), (1i128 << 31) - 1);
    }

    #[test]
    fn signed_lift_matches_negation() {
        let v: u64 = (-5i8).lift();
        assert_eq!(v, 0u64.wsub(5));
        let w: u32 = 200u8.lift();
        assert_eq!(w, 200);
    }

    #[test]
    fn le_roundtrip() {
        let mut out = Vec::new();
        0x0102_0304u32.write_le(&mut out);
        assert_eq!(out, [4, 3, 2, 1]);
        assert_eq!(u32::read_le(&out), 0x0102_0304);
    }
}
