// SPDX-License-Identifier: Apache-2.0
//! Arbitrary-precision helpers shared by the pairing group and Paillier layers.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand_core::RngCore;
use sha2::{Digest, Sha256};

/// Small primes used for trial division ahead of Miller-Rabin.
const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239,
    241, 251,
];

/// Number of Miller-Rabin witnesses. The first 12 primes are deterministic below
/// 3.3e24; above that the error bound is 4^-32 for random candidates.
const MR_ROUNDS: usize = 32;

/// Miller-Rabin using the first `MR_ROUNDS` small primes as witnesses.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in SMALL_PRIMES.iter() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;

    let witnesses = SMALL_PRIMES
        .iter()
        .take(MR_ROUNDS.min(SMALL_PRIMES.len()))
        .map(|&w| BigUint::from(w));
    'witness: for a in witnesses {
        let a = a % n;
        if a < two {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x.is_one() {
                return false;
            }
        }
        return false;
    }
    true
}

/// Uniform sample from `[0, bound)` by rejection on the bit length of `bound`.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "random_below: empty range");
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let excess = (bytes as u64 * 8 - bits) as u32;
    let mut buf = vec![0u8; bytes];
    loop {
        rng.fill_bytes(&mut buf);
        if excess > 0 {
            buf[0] &= 0xff >> excess;
        }
        let candidate = BigUint::from_bytes_be(&buf);
        if candidate < *bound {
            return candidate;
        }
    }
}

/// Uniform sample from `Z*_modulus`: nonzero and coprime to `modulus`.
pub fn random_unit<R: RngCore + ?Sized>(rng: &mut R, modulus: &BigUint) -> BigUint {
    loop {
        let r = random_below(rng, modulus);
        if !r.is_zero() && r.gcd(modulus).is_one() {
            return r;
        }
    }
}

/// Random integer with exactly `bits` bits where the top two bits are set, so the
/// product of two such values has exactly `2 * bits` bits.
pub fn random_top_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let bytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; bytes];
    rng.fill_bytes(&mut buf);
    let mut value = BigUint::from_bytes_be(&buf);
    let excess = bytes as u64 * 8 - bits;
    value >>= excess;
    value.set_bit(bits - 1, true);
    if bits >= 2 {
        value.set_bit(bits - 2, true);
    }
    value
}

/// Big-endian encoding left-padded with zeros to `width` bytes.
///
/// Panics if the value does not fit; callers size `width` from the modulus.
pub fn to_fixed_be(value: &BigUint, width: usize) -> Vec<u8> {
    let raw = value.to_bytes_be();
    let raw: &[u8] = if value.is_zero() { &[] } else { &raw };
    assert!(raw.len() <= width, "value wider than {width} bytes");
    let mut out = vec![0u8; width];
    out[width - raw.len()..].copy_from_slice(raw);
    out
}

/// Byte length of the canonical encoding of elements modulo `modulus`.
pub fn byte_len(modulus: &BigUint) -> usize {
    modulus.bits().div_ceil(8) as usize
}

/// SHA-256 in counter mode: `SHA256(tag_len || tag || ctr || input)` blocks
/// concatenated until `len` bytes are produced.
pub fn expand_hash(tag: &[u8], input: &[&[u8]], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut counter: u32 = 0;
    while out.len() < len {
        let mut hasher = Sha256::new();
        hasher.update((tag.len() as u32).to_be_bytes());
        hasher.update(tag);
        hasher.update(counter.to_be_bytes());
        for part in input {
            hasher.update((part.len() as u32).to_be_bytes());
            hasher.update(part);
        }
        out.extend_from_slice(&hasher.finalize());
        counter += 1;
    }
    out.truncate(len);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn naive_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn miller_rabin_matches_trial_division() {
        for n in 0u64..5000 {
            assert_eq!(is_probable_prime(&BigUint::from(n)), naive_prime(n), "n = {n}");
        }
    }

    #[test]
    fn known_large_values() {
        // 2^127 - 1 is a Mersenne prime; 2^128 + 1 is composite.
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_probable_prime(&m127));
        let f7 = (BigUint::one() << 128u32) + 1u32;
        assert!(!is_probable_prime(&f7));
        // Carmichael number.
        assert!(!is_probable_prime(&BigUint::from(561u32)));
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let bound = BigUint::from(1000u32);
        for _ in 0..500 {
            assert!(random_below(&mut rng, &bound) < bound);
        }
    }

    #[test]
    fn top_bits_set() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for bits in [16u64, 17, 64, 65, 127] {
            let v = random_top_bits(&mut rng, bits);
            assert_eq!(v.bits(), bits);
            assert!(v.bit(bits - 2));
        }
    }

    #[test]
    fn fixed_width_encoding() {
        assert_eq!(to_fixed_be(&BigUint::from(0x0102u32), 4), vec![0, 0, 1, 2]);
        assert_eq!(to_fixed_be(&BigUint::zero(), 2), vec![0, 0]);
    }

    #[test]
    fn expand_is_domain_separated() {
        let a = expand_hash(b"A", &[b"m"], 48);
        let b = expand_hash(b"B", &[b"m"], 48);
        assert_eq!(a.len(), 48);
        assert_ne!(a, b);
        // length prefixes keep ("ab","c") and ("a","bc") apart
        assert_ne!(
            expand_hash(b"A", &[b"ab", b"c"], 32),
            expand_hash(b"A", &[b"a", b"bc"], 32)
        );
    }
}
