// SPDX-License-Identifier: Apache-2.0
//! Paillier cryptosystem over `Z*_{n^2}`.
//!
//! The generator defaults to `g = n + 1`, for which `g^m = 1 + m·n (mod n^2)`.
//! Holders that only need to re-randomize ciphertexts get a [`PublicModulus`]
//! without `g`.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand_core::RngCore;

use crate::bigint::{byte_len, is_probable_prime, random_top_bits, random_unit, to_fixed_be};

/// Attempts per prime before key generation gives up.
const PRIME_ATTEMPTS_PER_BIT: u64 = 200;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PaillierError {
    #[error("key size {0} bits is below the 16-bit minimum")]
    KeySize(u64),
    #[error("prime generation did not converge")]
    PrimeGeneration,
    #[error("invalid primes: {0}")]
    InvalidPrimes(&'static str),
    #[error("plaintext out of range [0, n)")]
    PlaintextRange,
    #[error("randomness is not a unit mod n")]
    Randomness,
    #[error("malformed ciphertext")]
    MalformedCiphertext,
    #[error("scalar out of range [0, n)")]
    ScalarRange,
}

/// `n` and `n^2`: everything needed to multiply and re-randomize ciphertexts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicModulus {
    n: BigUint,
    n_squared: BigUint,
}

impl PublicModulus {
    pub fn new(n: BigUint) -> Self {
        let n_squared = &n * &n;
        Self { n, n_squared }
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    /// Byte width of a serialized ciphertext, `2·|n|`.
    pub fn ciphertext_len(&self) -> usize {
        2 * byte_len(&self.n)
    }

    /// `base^n mod n^2`
    pub fn pow_n(&self, base: &BigUint) -> BigUint {
        base.modpow(&self.n, &self.n_squared)
    }

    /// Multiplies `c` by `r^n` for a fresh unit `r`: same plaintext, new encoding.
    pub fn rerandomize<R: RngCore + ?Sized>(&self, c: &Ciphertext, rng: &mut R) -> Ciphertext {
        let r = random_unit(rng, &self.n);
        Ciphertext((&c.0 * self.pow_n(&r)) % &self.n_squared)
    }

    /// Homomorphic addition: ciphertext product mod `n^2`.
    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        Ciphertext((&a.0 * &b.0) % &self.n_squared)
    }

    /// `0 < c < n^2` and `gcd(c, n) = 1`.
    pub fn is_valid(&self, c: &Ciphertext) -> bool {
        !c.0.is_zero() && c.0 < self.n_squared && c.0.gcd(&self.n).is_one()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierPublicKey {
    modulus: PublicModulus,
    g: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierSecretKey {
    lambda: BigUint,
    mu: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierKeypair {
    pub public: PaillierPublicKey,
    pub secret: PaillierSecretKey,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ciphertext(pub BigUint);

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn to_bytes(&self, modulus: &PublicModulus) -> Vec<u8> {
        to_fixed_be(&self.0, modulus.ciphertext_len())
    }

    pub fn from_bytes(modulus: &PublicModulus, bytes: &[u8]) -> Result<Self, PaillierError> {
        if bytes.len() != modulus.ciphertext_len() {
            return Err(PaillierError::MalformedCiphertext);
        }
        Ok(Ciphertext(BigUint::from_bytes_be(bytes)))
    }
}

/// `L(x) = (x - 1) / n`
fn l_function(x: &BigUint, n: &BigUint) -> BigUint {
    (x - 1u32) / n
}

fn random_prime<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> Result<BigUint, PaillierError> {
    for _ in 0..PRIME_ATTEMPTS_PER_BIT * bits {
        let mut candidate = random_top_bits(rng, bits);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate) {
            return Ok(candidate);
        }
    }
    Err(PaillierError::PrimeGeneration)
}

/// Generates a keypair whose primes have `kappa1` bits each (so `n` has `2·kappa1` bits).
pub fn keygen<R: RngCore + ?Sized>(kappa1: u64, rng: &mut R) -> Result<PaillierKeypair, PaillierError> {
    if kappa1 < 16 {
        return Err(PaillierError::KeySize(kappa1));
    }
    loop {
        let p1 = random_prime(rng, kappa1)?;
        let q1 = random_prime(rng, kappa1)?;
        match PaillierKeypair::from_primes(&p1, &q1) {
            Ok(keys) => return Ok(keys),
            Err(PaillierError::InvalidPrimes(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

impl PaillierKeypair {
    /// Builds the keypair for fixed primes with `g = n + 1`.
    pub fn from_primes(p1: &BigUint, q1: &BigUint) -> Result<Self, PaillierError> {
        if p1 == q1 {
            return Err(PaillierError::InvalidPrimes("p1 == q1"));
        }
        let n = p1 * q1;
        let phi = (p1 - 1u32) * (q1 - 1u32);
        if !n.gcd(&phi).is_one() {
            return Err(PaillierError::InvalidPrimes("gcd(n, phi) != 1"));
        }
        let g = &n + 1u32;
        Self::with_generator(p1, q1, g)
    }

    /// Builds the keypair for an explicit generator `g ∈ Z*_{n^2}`.
    pub fn with_generator(p1: &BigUint, q1: &BigUint, g: BigUint) -> Result<Self, PaillierError> {
        let n = p1 * q1;
        let modulus = PublicModulus::new(n);
        let lambda = (p1 - 1u32).lcm(&(q1 - 1u32));
        let u = g.modpow(&lambda, modulus.n_squared());
        let mu = l_function(&u, modulus.n())
            .modinv(modulus.n())
            .ok_or(PaillierError::InvalidPrimes("L(g^lambda) not invertible"))?;
        Ok(Self {
            public: PaillierPublicKey { modulus, g },
            secret: PaillierSecretKey { lambda, mu },
        })
    }
}

impl PaillierPublicKey {
    pub fn modulus(&self) -> &PublicModulus {
        &self.modulus
    }

    pub fn n(&self) -> &BigUint {
        self.modulus.n()
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// `g^m mod n^2`, using `1 + m·n` when `g = n + 1`.
    pub fn pow_g(&self, m: &BigUint) -> BigUint {
        let n = self.modulus.n();
        let n2 = self.modulus.n_squared();
        if self.g == n + 1u32 {
            (BigUint::one() + (m % n) * n) % n2
        } else {
            self.g.modpow(m, n2)
        }
    }

    /// `c = g^m · r^n mod n^2`
    pub fn encrypt(&self, m: &BigUint, r: &BigUint) -> Result<Ciphertext, PaillierError> {
        let n = self.modulus.n();
        if m >= n {
            return Err(PaillierError::PlaintextRange);
        }
        if r.is_zero() || r >= n || !r.gcd(n).is_one() {
            return Err(PaillierError::Randomness);
        }
        let c = (self.pow_g(m) * self.modulus.pow_n(r)) % self.modulus.n_squared();
        Ok(Ciphertext(c))
    }

    pub fn encrypt_random<R: RngCore + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext, PaillierError> {
        let r = random_unit(rng, self.modulus.n());
        self.encrypt(m, &r)
    }

    pub fn add(&self, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
        self.modulus.add(a, b)
    }

    /// `c^a mod n^2`, an encryption of `a·m mod n`.
    pub fn scalar_mul(&self, c: &Ciphertext, a: &BigUint) -> Result<Ciphertext, PaillierError> {
        if a >= self.modulus.n() {
            return Err(PaillierError::ScalarRange);
        }
        Ok(Ciphertext(c.0.modpow(a, self.modulus.n_squared())))
    }
}

impl PaillierSecretKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }

    /// `m = L(c^λ mod n^2) · μ mod n`
    pub fn decrypt(&self, pk: &PaillierPublicKey, c: &Ciphertext) -> Result<BigUint, PaillierError> {
        let modulus = pk.modulus();
        if !modulus.is_valid(c) {
            return Err(PaillierError::MalformedCiphertext);
        }
        let u = c.0.modpow(&self.lambda, modulus.n_squared());
        Ok((l_function(&u, modulus.n()) * &self.mu) % modulus.n())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    fn toy() -> PaillierKeypair {
        PaillierKeypair::from_primes(&big(5), &big(7)).unwrap()
    }

    #[test]
    fn toy_key_shape() {
        let keys = toy();
        assert_eq!(keys.public.n(), &big(35));
        assert_eq!(keys.public.g(), &big(36));
        assert_eq!(keys.secret.lambda(), &big(12));
    }

    #[test]
    fn toy_encryption_matches_direct_exponentiation() {
        let keys = toy();
        // oracle: 36^3 · 2^35 mod 1225, by repeated multiplication
        let n2 = 1225u64;
        let mut expected = 1u64;
        for _ in 0..3 {
            expected = expected * 36 % n2;
        }
        for _ in 0..35 {
            expected = expected * 2 % n2;
        }
        let c = keys.public.encrypt(&big(3), &big(2)).unwrap();
        assert_eq!(c.0, big(expected));
        assert_eq!(keys.secret.decrypt(&keys.public, &c).unwrap(), big(3));
    }

    #[test]
    fn zero_with_unit_randomness_is_one() {
        let keys = toy();
        assert_eq!(keys.public.encrypt(&big(0), &big(1)).unwrap().0, big(1));
    }

    #[test]
    fn input_validation() {
        let keys = toy();
        assert_eq!(
            keys.public.encrypt(&big(35), &big(2)),
            Err(PaillierError::PlaintextRange)
        );
        assert_eq!(keys.public.encrypt(&big(1), &big(7)), Err(PaillierError::Randomness));
        assert_eq!(keys.public.encrypt(&big(1), &big(0)), Err(PaillierError::Randomness));
        assert_eq!(
            keys.secret.decrypt(&keys.public, &Ciphertext(big(5))),
            Err(PaillierError::MalformedCiphertext)
        );
        assert_eq!(
            keys.secret.decrypt(&keys.public, &Ciphertext(big(1225))),
            Err(PaillierError::MalformedCiphertext)
        );
        assert_eq!(
            keygen(8, &mut ChaCha20Rng::seed_from_u64(0)),
            Err(PaillierError::KeySize(8))
        );
    }

    #[test]
    fn generic_generator_decrypts() {
        // g = 141: L(141^12 mod 1225) = 13 is a unit mod 35
        let keys = PaillierKeypair::with_generator(&big(5), &big(7), big(141)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for m in 0..35u64 {
            let c = keys.public.encrypt_random(&big(m), &mut rng).unwrap();
            assert_eq!(keys.secret.decrypt(&keys.public, &c).unwrap(), big(m));
        }
    }

    #[test]
    fn homomorphic_operations() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let keys = keygen(32, &mut rng).unwrap();
        let (pk, sk) = (&keys.public, &keys.secret);
        let e2 = pk.encrypt_random(&big(2), &mut rng).unwrap();
        let e3 = pk.encrypt_random(&big(3), &mut rng).unwrap();
        assert_eq!(sk.decrypt(pk, &pk.add(&e2, &e3)).unwrap(), big(5));
        let zero = pk.encrypt_random(&big(0), &mut rng).unwrap();
        assert_eq!(sk.decrypt(pk, &pk.add(&e3, &zero)).unwrap(), big(3));
        assert_eq!(sk.decrypt(pk, &pk.scalar_mul(&e3, &big(4)).unwrap()).unwrap(), big(12));
        assert_eq!(sk.decrypt(pk, &pk.scalar_mul(&e3, &big(1)).unwrap()).unwrap(), big(3));
        assert_eq!(sk.decrypt(pk, &pk.scalar_mul(&e3, &big(0)).unwrap()).unwrap(), big(0));
        let fifty = (0..50).fold(pk.encrypt_random(&big(0), &mut rng).unwrap(), |acc, _| {
            pk.add(&acc, &pk.encrypt_random(&big(1), &mut rng).unwrap())
        });
        assert_eq!(sk.decrypt(pk, &fifty).unwrap(), big(50));
        assert_eq!(pk.scalar_mul(&e3, pk.n()), Err(PaillierError::ScalarRange));
    }

    #[test]
    fn rerandomization_changes_bytes_not_plaintext() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let keys = keygen(32, &mut rng).unwrap();
        let c = keys.public.encrypt_random(&big(77), &mut rng).unwrap();
        let c2 = keys.public.modulus().rerandomize(&c, &mut rng);
        assert_ne!(c.to_bytes(keys.public.modulus()), c2.to_bytes(keys.public.modulus()));
        assert_eq!(keys.secret.decrypt(&keys.public, &c2).unwrap(), big(77));
    }

    #[test]
    fn keygen_is_seed_deterministic() {
        let a = keygen(64, &mut ChaCha20Rng::seed_from_u64(42)).unwrap();
        let b = keygen(64, &mut ChaCha20Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.public.n(), b.public.n());
        assert_eq!(a.public.n().bits(), 128);
    }

    #[test]
    fn fixed_width_serialization() {
        let keys = toy();
        let c = keys.public.encrypt(&big(3), &big(2)).unwrap();
        let bytes = c.to_bytes(keys.public.modulus());
        assert_eq!(bytes.len(), 2);
        assert_eq!(Ciphertext::from_bytes(keys.public.modulus(), &bytes).unwrap(), c);
        assert!(Ciphertext::from_bytes(keys.public.modulus(), &[1, 2, 3]).is_err());
    }
}
