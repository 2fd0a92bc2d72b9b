// SPDX-License-Identifier: Apache-2.0
//! Trust tokens: an encrypted trust value bound to an update epoch.
//!
//! With `h = H1(t_c ‖ χ)` a token is the pair
//!
//! ```text
//! C = g^T · (r·h)^n          c_sig = g^(T + h) · r^n        (mod n^2)
//! ```
//!
//! so that `C · g^h ≡ c_sig · h^n`. Both halves are re-randomized by the same
//! `r'^n`, which keeps the identity while changing every byte of the encoding.

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand_core::RngCore;

use crate::bigint::{byte_len, expand_hash, random_unit, to_fixed_be};
use crate::paillier::{Ciphertext, PaillierError, PaillierPublicKey, PublicModulus};

const H1_TAG: &[u8] = b"TPCS-H1-v1";
const H1_MAX_ATTEMPTS: u32 = 256;

/// Trust update epoch; the simulator uses the round number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Epoch(pub u64);

impl Epoch {
    pub fn next(self) -> Self {
        Epoch(self.0 + 1)
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }
}

impl core::fmt::Display for Epoch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("no H1 value coprime to n after {0} attempts")]
    H1Exhausted(u32),
    #[error("tokens in one batch carry different epochs")]
    MixedEpochs,
    #[error("empty token batch")]
    EmptyBatch,
    #[error("malformed token encoding")]
    Malformed,
    #[error("secret is not a unit mod n")]
    InvalidSecret,
    #[error(transparent)]
    Paillier(#[from] PaillierError),
}

/// `χ ∈ Z*_n`, shared by the TA and the RSUs.
#[derive(Clone, PartialEq, Eq)]
pub struct EpochSecret {
    chi: BigUint,
}

impl core::fmt::Debug for EpochSecret {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("EpochSecret(..)")
    }
}

impl EpochSecret {
    pub fn generate<R: RngCore + ?Sized>(n: &BigUint, rng: &mut R) -> Self {
        Self {
            chi: random_unit(rng, n),
        }
    }

    pub fn from_value(n: &BigUint, chi: BigUint) -> Result<Self, TokenError> {
        if chi.is_zero() || &chi >= n || !chi.gcd(n).is_one() {
            return Err(TokenError::InvalidSecret);
        }
        Ok(Self { chi })
    }

    pub fn value(&self) -> &BigUint {
        &self.chi
    }

    /// `H1(t_c ‖ χ)`: `kappa1` hash bits reduced mod `n`, re-hashed with a counter
    /// until the result is a nonzero unit mod `n`.
    pub fn h1(&self, n: &BigUint, kappa1: u64, epoch: Epoch) -> Result<BigUint, TokenError> {
        let bits = kappa1.max(8);
        let len = bits.div_ceil(8) as usize;
        let excess = (len as u64) * 8 - bits;
        let chi = to_fixed_be(&self.chi, byte_len(n));
        for counter in 0..H1_MAX_ATTEMPTS {
            let mut digest = expand_hash(H1_TAG, &[&epoch.to_be_bytes(), &chi, &counter.to_be_bytes()], len);
            digest[0] &= 0xff >> excess;
            let h = BigUint::from_bytes_be(&digest) % n;
            if !h.is_zero() && h.gcd(n).is_one() {
                return Ok(h);
            }
        }
        Err(TokenError::H1Exhausted(H1_MAX_ATTEMPTS))
    }
}

/// Encrypted trust value `C`, its freshness companion `c_sig`, and the epoch.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TrustToken {
    pub c_trust: Ciphertext,
    pub c_sig: Ciphertext,
    pub epoch: Epoch,
}

/// Issues a token for `trust` (already fixed-point encoded) at `epoch`.
pub fn issue<R: RngCore + ?Sized>(
    pk: &PaillierPublicKey,
    chi: &EpochSecret,
    kappa1: u64,
    trust: &BigUint,
    epoch: Epoch,
    rng: &mut R,
) -> Result<TrustToken, TokenError> {
    let n = pk.n();
    let h = chi.h1(n, kappa1, epoch)?;
    let r = random_unit(rng, n);
    let rh = (&r * &h) % n;
    let c_trust = pk.encrypt(trust, &rh)?;
    let shifted = (trust + &h) % n;
    let c_sig = pk.encrypt(&shifted, &r)?;
    Ok(TrustToken { c_trust, c_sig, epoch })
}

impl TrustToken {
    /// Multiplies both components by one fresh `r'^n`.
    pub fn perturb<R: RngCore + ?Sized>(&self, modulus: &PublicModulus, rng: &mut R) -> TrustToken {
        let r = random_unit(rng, modulus.n());
        let blind = modulus.pow_n(&r);
        let n2 = modulus.n_squared();
        TrustToken {
            c_trust: Ciphertext((&self.c_trust.0 * &blind) % n2),
            c_sig: Ciphertext((&self.c_sig.0 * &blind) % n2),
            epoch: self.epoch,
        }
    }

    pub fn encoded_len(modulus: &PublicModulus) -> usize {
        8 + 2 * modulus.ciphertext_len()
    }

    /// `epoch (8 bytes BE) ‖ c_trust ‖ c_sig`, ciphertexts at fixed width.
    pub fn to_bytes(&self, modulus: &PublicModulus) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::encoded_len(modulus));
        out.extend_from_slice(&self.epoch.to_be_bytes());
        out.extend_from_slice(&self.c_trust.to_bytes(modulus));
        out.extend_from_slice(&self.c_sig.to_bytes(modulus));
        out
    }

    pub fn from_bytes(modulus: &PublicModulus, bytes: &[u8]) -> Result<Self, TokenError> {
        if bytes.len() != Self::encoded_len(modulus) {
            return Err(TokenError::Malformed);
        }
        let width = modulus.ciphertext_len();
        let mut epoch = [0u8; 8];
        epoch.copy_from_slice(&bytes[..8]);
        Ok(TrustToken {
            epoch: Epoch(u64::from_be_bytes(epoch)),
            c_trust: Ciphertext::from_bytes(modulus, &bytes[8..8 + width])?,
            c_sig: Ciphertext::from_bytes(modulus, &bytes[8 + width..])?,
        })
    }
}

/// True iff the token carries `current` and `C · g^h ≡ c_sig · h^n (mod n^2)`.
pub fn verify_fresh(
    pk: &PaillierPublicKey,
    chi: &EpochSecret,
    kappa1: u64,
    token: &TrustToken,
    current: Epoch,
) -> bool {
    if token.epoch != current {
        return false;
    }
    let modulus = pk.modulus();
    if !modulus.is_valid(&token.c_trust) || !modulus.is_valid(&token.c_sig) {
        return false;
    }
    let Ok(h) = chi.h1(pk.n(), kappa1, current) else {
        return false;
    };
    let n2 = modulus.n_squared();
    let lhs = (&token.c_trust.0 * pk.pow_g(&h)) % n2;
    let rhs = (&token.c_sig.0 * modulus.pow_n(&h)) % n2;
    lhs == rhs
}

/// `g^(k·h) · Π C_j ≡ h^(n·k) · Π c_sig_j (mod n^2)` over `k` tokens of one epoch.
///
/// Returns `Ok(false)` when the shared epoch differs from `current` or any
/// component is outside `Z*_{n^2}`.
pub fn batch_verify_fresh(
    pk: &PaillierPublicKey,
    chi: &EpochSecret,
    kappa1: u64,
    tokens: &[&TrustToken],
    current: Epoch,
) -> Result<bool, TokenError> {
    let first = tokens.first().ok_or(TokenError::EmptyBatch)?;
    if tokens.iter().any(|t| t.epoch != first.epoch) {
        return Err(TokenError::MixedEpochs);
    }
    if first.epoch != current {
        return Ok(false);
    }
    let modulus = pk.modulus();
    if tokens
        .iter()
        .any(|t| !modulus.is_valid(&t.c_trust) || !modulus.is_valid(&t.c_sig))
    {
        return Ok(false);
    }
    let h = chi.h1(pk.n(), kappa1, current)?;
    let n2 = modulus.n_squared();
    let k = BigUint::from(tokens.len());
    let prod_trust = tokens.iter().fold(BigUint::one(), |acc, t| (acc * &t.c_trust.0) % n2);
    let prod_sig = tokens.iter().fold(BigUint::one(), |acc, t| (acc * &t.c_sig.0) % n2);
    let lhs = (pk.pow_g(&(&k * &h)) * prod_trust) % n2;
    let rhs = (h.modpow(&(modulus.n() * &k), n2) * prod_sig) % n2;
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paillier::{keygen, PaillierKeypair};
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    const K1: u64 = 64;

    fn setup(seed: u64) -> (PaillierKeypair, EpochSecret, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = keygen(64, &mut rng).unwrap();
        let chi = EpochSecret::generate(kp.public.n(), &mut rng);
        (kp, chi, rng)
    }

    #[test]
    fn issued_token_decrypts_and_is_fresh() {
        let (kp, chi, mut rng) = setup(1);
        let t = issue(&kp.public, &chi, K1, &BigUint::from(100u32), Epoch(1), &mut rng).unwrap();
        assert!(verify_fresh(&kp.public, &chi, K1, &t, Epoch(1)));
        assert_eq!(
            kp.secret.decrypt(&kp.public, &t.c_trust).unwrap(),
            BigUint::from(100u32)
        );
        let h = chi.h1(kp.public.n(), K1, Epoch(1)).unwrap();
        let expected = (BigUint::from(100u32) + h) % kp.public.n();
        assert_eq!(kp.secret.decrypt(&kp.public, &t.c_sig).unwrap(), expected);
    }

    #[test]
    fn h1_is_deterministic_and_epoch_dependent() {
        let (kp, chi, _) = setup(2);
        let n = kp.public.n();
        let a = chi.h1(n, K1, Epoch(3)).unwrap();
        assert_eq!(a, chi.h1(n, K1, Epoch(3)).unwrap());
        assert_ne!(a, chi.h1(n, K1, Epoch(4)).unwrap());
        assert!(a.bits() <= K1);
        assert!(a.gcd(n).is_one());
    }

    #[test]
    fn h1_rehashes_until_coprime() {
        // n = 15: a third of all residues share a factor with n.
        let n = BigUint::from(15u32);
        let chi = EpochSecret::from_value(&n, BigUint::from(2u32)).unwrap();
        for e in 0..200 {
            let h = chi.h1(&n, 16, Epoch(e)).unwrap();
            assert!(h.gcd(&n).is_one());
        }
    }

    #[test]
    fn secret_must_be_unit() {
        let n = BigUint::from(15u32);
        assert_eq!(
            EpochSecret::from_value(&n, BigUint::from(5u32)),
            Err(TokenError::InvalidSecret)
        );
        assert_eq!(
            EpochSecret::from_value(&n, BigUint::from(0u32)),
            Err(TokenError::InvalidSecret)
        );
    }

    #[test]
    fn perturb_preserves_freshness_and_plaintext() {
        let (kp, chi, mut rng) = setup(3);
        let t = issue(&kp.public, &chi, K1, &BigUint::from(7870u32), Epoch(2), &mut rng).unwrap();
        let modulus = kp.public.modulus();
        let mut seen = alloc::collections::BTreeSet::new();
        seen.insert(t.to_bytes(modulus));
        for _ in 0..100 {
            let p = t.perturb(modulus, &mut rng);
            assert!(verify_fresh(&kp.public, &chi, K1, &p, Epoch(2)));
            assert_eq!(
                kp.secret.decrypt(&kp.public, &p.c_trust).unwrap(),
                BigUint::from(7870u32)
            );
            assert!(seen.insert(p.to_bytes(modulus)));
        }
    }

    #[test]
    fn collusion_product_is_rejected() {
        let (kp, chi, mut rng) = setup(4);
        let a = issue(&kp.public, &chi, K1, &BigUint::from(100u32), Epoch(5), &mut rng).unwrap();
        let b = issue(&kp.public, &chi, K1, &BigUint::from(9000u32), Epoch(5), &mut rng).unwrap();
        let m = kp.public.modulus();
        let forged = TrustToken {
            c_trust: m.add(&a.c_trust, &b.c_trust),
            c_sig: m.add(&a.c_sig, &b.c_sig),
            epoch: Epoch(5),
        };
        assert!(!verify_fresh(&kp.public, &chi, K1, &forged, Epoch(5)));
    }

    #[test]
    fn replay_and_epoch_binding() {
        let (kp, chi, mut rng) = setup(5);
        let old = issue(&kp.public, &chi, K1, &BigUint::from(100u32), Epoch(1), &mut rng).unwrap();
        assert!(!verify_fresh(&kp.public, &chi, K1, &old, Epoch(2)));
        // relabelling the epoch does not help: h changes with the epoch
        let relabelled = TrustToken { epoch: Epoch(2), ..old };
        assert!(!verify_fresh(&kp.public, &chi, K1, &relabelled, Epoch(2)));
    }

    #[test]
    fn wrong_secret_fails() {
        let (kp, chi, mut rng) = setup(6);
        let other = EpochSecret::generate(kp.public.n(), &mut rng);
        let t = issue(&kp.public, &chi, K1, &BigUint::from(1u32), Epoch(1), &mut rng).unwrap();
        assert!(!verify_fresh(&kp.public, &other, K1, &t, Epoch(1)));
    }

    #[test]
    fn batch_matches_individual() {
        let (kp, chi, mut rng) = setup(7);
        let tokens: Vec<_> = (0..50u32)
            .map(|i| issue(&kp.public, &chi, K1, &BigUint::from(i * 100), Epoch(3), &mut rng).unwrap())
            .collect();
        let refs: Vec<_> = tokens.iter().collect();
        assert!(batch_verify_fresh(&kp.public, &chi, K1, &refs, Epoch(3)).unwrap());
        assert!(batch_verify_fresh(&kp.public, &chi, K1, &refs[..1], Epoch(3)).unwrap());
        assert!(!batch_verify_fresh(&kp.public, &chi, K1, &refs, Epoch(4)).unwrap());

        let replay = issue(&kp.public, &chi, K1, &BigUint::from(5000u32), Epoch(2), &mut rng).unwrap();
        let relabelled = TrustToken {
            epoch: Epoch(3),
            ..replay.clone()
        };
        let mut mutated = refs.clone();
        mutated[17] = &relabelled;
        assert!(!batch_verify_fresh(&kp.public, &chi, K1, &mutated, Epoch(3)).unwrap());
        mutated[17] = &replay;
        assert_eq!(
            batch_verify_fresh(&kp.public, &chi, K1, &mutated, Epoch(3)),
            Err(TokenError::MixedEpochs)
        );
        assert_eq!(
            batch_verify_fresh(&kp.public, &chi, K1, &[], Epoch(3)),
            Err(TokenError::EmptyBatch)
        );
    }

    #[test]
    fn wire_roundtrip() {
        let (kp, chi, mut rng) = setup(8);
        let t = issue(&kp.public, &chi, K1, &BigUint::from(42u32), Epoch(0x0102), &mut rng).unwrap();
        let m = kp.public.modulus();
        let bytes = t.to_bytes(m);
        assert_eq!(bytes.len(), TrustToken::encoded_len(m));
        assert_eq!(&bytes[..8], &[0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(TrustToken::from_bytes(m, &bytes).unwrap(), t);
        assert_eq!(TrustToken::from_bytes(m, &bytes[1..]), Err(TokenError::Malformed));
    }
}
