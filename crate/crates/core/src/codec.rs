// SPDX-License-Identifier: Apache-2.0
//! Fixed-point encoding of trust values and feedback into Paillier plaintexts.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

/// Which scale applies to a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Trust,
    Feedback,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CodecError {
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("scales must be positive")]
    ZeroScale,
    #[error("{processors} processors × {trust_scale} × {feedback_scale} does not fit below the Paillier modulus")]
    Overflow {
        processors: u64,
        trust_scale: u64,
        feedback_scale: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointCodec {
    pub trust_scale: u64,
    pub feedback_scale: u64,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self {
            trust_scale: 10_000,
            feedback_scale: 1_000,
        }
    }
}

impl FixedPointCodec {
    pub fn new(trust_scale: u64, feedback_scale: u64) -> Result<Self, CodecError> {
        if trust_scale == 0 || feedback_scale == 0 {
            return Err(CodecError::ZeroScale);
        }
        Ok(Self {
            trust_scale,
            feedback_scale,
        })
    }

    pub fn scale(&self, which: Quantity) -> u64 {
        match which {
            Quantity::Trust => self.trust_scale,
            Quantity::Feedback => self.feedback_scale,
        }
    }

    /// `round(value · scale)` for `value ∈ [0, 1]`.
    pub fn encode(&self, value: f64, which: Quantity) -> Result<u64, CodecError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(CodecError::OutOfRange(value));
        }
        Ok(libm::round(value * self.scale(which) as f64) as u64)
    }

    pub fn decode(&self, encoded: u64, which: Quantity) -> f64 {
        encoded as f64 / self.scale(which) as f64
    }

    /// Checks that the worst-case weighted sum of `processors` reports stays below `n`.
    pub fn check_capacity(&self, processors: u64, n: &BigUint) -> Result<(), CodecError> {
        let worst = BigUint::from(processors) * self.trust_scale * self.feedback_scale;
        if &worst < n {
            Ok(())
        } else {
            Err(CodecError::Overflow {
                processors,
                trust_scale: self.trust_scale,
                feedback_scale: self.feedback_scale,
            })
        }
    }

    /// `Σ T̂ f̂ / (Σ T̂ · S_F)` as an exact fraction, then converted to `f64`.
    pub fn weighted_ratio(&self, weighted: &BigUint, total: &BigUint) -> Option<f64> {
        use num_integer::Integer;
        let denominator = total * self.feedback_scale;
        if denominator == BigUint::from(0u32) {
            return None;
        }
        let gcd = weighted.gcd(&denominator);
        let (num, den) = if gcd == BigUint::from(0u32) {
            (weighted.clone(), denominator)
        } else {
            (weighted / &gcd, denominator / &gcd)
        };
        Some(num.to_f64()? / den.to_f64()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodes_reference_values() {
        let codec = FixedPointCodec::default();
        assert_eq!(codec.encode(0.787, Quantity::Trust).unwrap(), 7870);
        assert_eq!(codec.encode(0.0, Quantity::Feedback).unwrap(), 0);
        assert_eq!(codec.encode(1.0, Quantity::Trust).unwrap(), 10_000);
        assert_eq!(codec.encode(0.75, Quantity::Feedback).unwrap(), 750);
        assert!(codec.encode(1.01, Quantity::Trust).is_err());
        assert!(codec.encode(f64::NAN, Quantity::Trust).is_err());
    }

    #[test]
    fn decode_is_within_half_step() {
        let codec = FixedPointCodec::default();
        for i in 0..=1000 {
            let v = i as f64 / 1000.0 + 0.00037;
            let v = v.min(1.0);
            for q in [Quantity::Trust, Quantity::Feedback] {
                let back = codec.decode(codec.encode(v, q).unwrap(), q);
                assert!((back - v).abs() <= 0.5 / codec.scale(q) as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn capacity_bound() {
        let codec = FixedPointCodec::default();
        assert!(codec.check_capacity(50, &BigUint::from(500_000_001u64)).is_ok());
        assert!(codec.check_capacity(50, &BigUint::from(500_000_000u64)).is_err());
    }

    #[test]
    fn ratio_is_exact_fraction() {
        let codec = FixedPointCodec::default();
        // trusts {0.9, 0.1}, feedback {1.0, 0.0}: (9000·1000 + 1000·0) / (10000·1000)
        let r = codec
            .weighted_ratio(&BigUint::from(9_000_000u64), &BigUint::from(10_000u64))
            .unwrap();
        assert_eq!(r, 0.9);
        assert!(codec
            .weighted_ratio(&BigUint::from(1u32), &BigUint::from(0u32))
            .is_none());
    }
}
