use crate::error::{invalid, Error, Result};
use crate::math::round;

/// A power-of-two modulus `m = 2^bits`, `1 ≤ bits ≤ 64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modulus {
    bits: u32,
}

impl Modulus {
    pub fn from_bits(bits: u32) -> Result<Self> {
        if (1..=64).contains(&bits) {
            Ok(Modulus { bits })
        } else {
            Err(invalid("bits", "modulus must have between 1 and 64 bits"))
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn value(self) -> u128 {
        1u128 << self.bits
    }

    pub fn mask(self) -> u64 {
        if self.bits == 64 {
            u64::MAX
        } else {
            (1u64 << self.bits) - 1
        }
    }

    pub fn reduce(self, x: u64) -> u64 {
        x & self.mask()
    }

    pub fn add(self, a: u64, b: u64) -> u64 {
        a.wrapping_add(b) & self.mask()
    }

    pub fn sub(self, a: u64, b: u64) -> u64 {
        a.wrapping_sub(b) & self.mask()
    }

    pub fn neg(self, a: u64) -> u64 {
        0u64.wrapping_sub(a) & self.mask()
    }

    /// Largest magnitude a signed value may have to survive the residue
    /// round trip: signed values live in `[-m/2, m/2)`.
    pub fn half(self) -> u128 {
        1u128 << (self.bits - 1)
    }

    /// Two's complement wrap of a signed integer.
    pub fn from_signed(self, v: i64) -> u64 {
        (v as u64) & self.mask()
    }

    /// Centered lift of a residue to `[-m/2, m/2)`.
    pub fn to_signed(self, r: u64) -> i128 {
        let r = self.reduce(r) as i128;
        if r >= self.half() as i128 {
            r - self.value() as i128
        } else {
            r
        }
    }

    pub fn fits_signed(self, v: i64) -> bool {
        let v = v as i128;
        let half = self.half() as i128;
        -half <= v && v < half
    }
}

/// `m = 2^⌈log2(z·N)⌉` for maximal encoded value `z` and cluster size `N`,
/// never below `m = 2`.
pub fn choose_modulus(z: u64, n: u32) -> Result<Modulus> {
    if z == 0 || n == 0 {
        return Err(invalid("z", "both the plaintext bound and the cluster size must be at least 1"));
    }
    let product = z as u128 * n as u128;
    let bits = if product <= 1 {
        0
    } else {
        128 - (product - 1).leading_zeros()
    };
    Modulus::from_bits(bits.max(1))
}

/// Fixed-point encoding of watts. `scale` encoding units per watt; `max_plain`
/// bounds the magnitude of a legitimate decrypted aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointCodec {
    scale: f64,
    max_plain: u64,
}

/// One encoding unit is 0.1 W.
pub const DEFAULT_SCALE: f64 = 10.0;

impl FixedPointCodec {
    pub fn new(scale: f64, max_plain: u64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(invalid("scale", "must be positive and finite"));
        }
        if max_plain == 0 {
            return Err(invalid("max_plain", "must be at least 1"));
        }
        Ok(FixedPointCodec { scale, max_plain })
    }

    /// Codec for a cluster of `n` meters reading at most `max_watts` each with
    /// Laplace scale at most `lambda_max`: the plaintext bound is
    /// `n·max + 20·λ_max` in encoding units, which the aggregate plus noise
    /// exceeds with probability below `e^{-20}`.
    pub fn with_headroom(scale: f64, n: u32, max_watts: f64, lambda_max: f64) -> Result<Self> {
        if !(max_watts >= 0.0 && lambda_max >= 0.0) {
            return Err(invalid("max_watts", "bounds must be nonnegative"));
        }
        let units = (n as f64 * max_watts + 20.0 * lambda_max) * scale;
        if !(units.is_finite() && units < (1u64 << 62) as f64) {
            return Err(invalid("max_watts", "plaintext bound too large"));
        }
        FixedPointCodec::new(scale, (units as u64).max(1))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn max_plain(&self) -> u64 {
        self.max_plain
    }

    /// Modulus for this codec's plaintext bound and a cluster of `n`.
    pub fn modulus(&self, n: u32) -> Result<Modulus> {
        choose_modulus(self.max_plain, n)
    }

    pub fn encode(&self, watts: f64) -> Result<i64> {
        let v = round(watts * self.scale);
        if !v.is_finite() || v.abs() >= (1u64 << 62) as f64 {
            return Err(Error::EncodingOverflow {
                value: if v.is_finite() { v as i128 } else { i128::MAX },
                bits: 63,
            });
        }
        Ok(v as i64)
    }

    pub fn decode(&self, units: i128) -> f64 {
        units as f64 / self.scale
    }
}
