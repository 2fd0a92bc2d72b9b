// SPDX-License-Identifier: Apache-2.0
//! Symmetric bilinear group of prime order `q`.
//!
//! The group `G` is the order-`q` subgroup of the supersingular curve
//! `y^2 = x^3 + x` over `F_p`, with `p = h·q - 1` and `p ≡ 3 (mod 4)`. The curve
//! has embedding degree 2, so `G_T` is the order-`q` subgroup of `F_p2^*`. The
//! pairing is the reduced Tate pairing composed with the distortion map
//! `(x, y) -> (-x, i·y)`, which makes it symmetric: `e: G × G -> G_T` with
//! `e(P, P) != 1`. Because the map is symmetric no G1/G2 assignment is needed:
//! generator, public keys, hashes and signatures all live in the same group.
//!
//! Parameters are derived deterministically from `kappa` (the bit length of `q`),
//! so two parties that agree on `kappa` agree on `(q, p, P)` byte for byte.

mod bls;
mod curve;
mod field;

use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::RngCore;

pub use bls::{
    batch_verify, batch_verify_handshake, sign, verify, verify_handshake, BatchOutcome, GroupSignature,
    HandshakeTriple, SigKeypair, SignedMessage,
};
pub use curve::GroupElement;

use crate::bigint::{byte_len, expand_hash, is_probable_prime, random_below, to_fixed_be};
use curve::Jacobian;
use field::{Fp2, PrimeField};

/// Smallest supported `kappa`; groups this small are for exhaustive tests only.
pub const MIN_KAPPA: u32 = 8;
pub const MAX_KAPPA: u32 = 1024;

/// Upper bound on the cofactor search `p = 4k·q - 1`.
const MAX_COFACTOR_STEPS: u32 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairingError {
    #[error("unsupported security parameter kappa = {0} (supported: {MIN_KAPPA}..={MAX_KAPPA})")]
    UnsupportedKappa(u32),
    #[error("no pairing-friendly prime found for kappa = {0}")]
    ParameterSearch(u32),
    #[error("malformed group element encoding: {0}")]
    Decode(&'static str),
    #[error("secret scalar must lie in [1, q)")]
    InvalidKey,
    #[error("batch must not be empty")]
    EmptyBatch,
}

/// Domain-separation tags for hashing into `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HashDomain {
    /// The protocol hash `H` (handshake proofs).
    Protocol,
    /// Hash of a message before signing.
    Signature,
    /// Derivation of the fixed generator.
    Generator,
}

impl HashDomain {
    fn tag(self) -> &'static [u8] {
        match self {
            HashDomain::Protocol => b"TPCS-H-v1",
            HashDomain::Signature => b"TPCS-SIG-v1",
            HashDomain::Generator => b"TPCS-GEN-v1",
        }
    }
}

/// Element of the target group `G_T ⊂ F_p2^*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GtElement(Fp2);

impl GtElement {
    pub fn identity() -> Self {
        GtElement(Fp2::one())
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }
}

/// `(q, P, G, G_T, e)` together with the field description needed to evaluate it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupParams {
    kappa: u32,
    q: BigUint,
    cofactor: BigUint,
    generator: GroupElement,
    field: PrimeField,
}

/// Deterministically derives a pairing group whose order `q` has exactly `kappa` bits.
pub fn gen_params(kappa: u32) -> Result<GroupParams, PairingError> {
    if !(MIN_KAPPA..=MAX_KAPPA).contains(&kappa) {
        return Err(PairingError::UnsupportedKappa(kappa));
    }
    let q = search_order(kappa);

    let mut found = None;
    for k in 1..=MAX_COFACTOR_STEPS {
        let cofactor = BigUint::from(4u32 * k);
        let p = &cofactor * &q - 1u32;
        if is_probable_prime(&p) {
            found = Some((cofactor, p));
            break;
        }
    }
    let (cofactor, p) = found.ok_or(PairingError::ParameterSearch(kappa))?;

    let mut params = GroupParams {
        kappa,
        q,
        cofactor,
        generator: GroupElement::Identity,
        field: PrimeField::new(p),
    };
    params.generator = params.hash_to_group_in(HashDomain::Generator, &kappa.to_be_bytes());
    Ok(params)
}

/// First prime with exactly `kappa` bits at or above a hash-derived starting point.
fn search_order(kappa: u32) -> BigUint {
    let bits = u64::from(kappa);
    let seed = expand_hash(b"TPCS-PARAMS-v1", &[&kappa.to_be_bytes()], bits.div_ceil(8) as usize);
    let mut start = BigUint::from_bytes_be(&seed) >> (seed.len() as u64 * 8 - bits);
    start.set_bit(bits - 1, true);
    start.set_bit(0, true);

    let floor = (BigUint::one() << (bits - 1)) + 1u32;
    let mut candidate = start;
    loop {
        if candidate.bits() > bits {
            candidate = floor.clone();
        }
        if is_probable_prime(&candidate) {
            return candidate;
        }
        candidate += 2u32;
    }
}

impl GroupParams {
    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// Prime group order.
    pub fn order(&self) -> &BigUint {
        &self.q
    }

    /// Base field characteristic.
    pub fn field_modulus(&self) -> &BigUint {
        &self.field.p
    }

    pub fn cofactor(&self) -> &BigUint {
        &self.cofactor
    }

    /// The generator `P`.
    pub fn generator(&self) -> &GroupElement {
        &self.generator
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        curve::add(&self.field, a, b)
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        curve::negate(&self.field, a)
    }

    pub fn mul(&self, a: &GroupElement, k: &BigUint) -> GroupElement {
        curve::scalar_mul(&self.field, a, &(k % &self.q))
    }

    /// `k·P`
    pub fn mul_generator(&self, k: &BigUint) -> GroupElement {
        self.mul(&self.generator, k)
    }

    /// Sum of a list of elements.
    pub fn sum<'a, I: IntoIterator<Item = &'a GroupElement>>(&self, items: I) -> GroupElement {
        items
            .into_iter()
            .fold(GroupElement::Identity, |acc, el| self.add(&acc, el))
    }

    /// Membership in the order-`q` subgroup.
    pub fn contains(&self, el: &GroupElement) -> bool {
        curve::is_on_curve(&self.field, el) && curve::scalar_mul(&self.field, el, &self.q).is_identity()
    }

    /// Uniform scalar in `[1, q)`.
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> BigUint {
        loop {
            let k = random_below(rng, &self.q);
            if !k.is_zero() {
                return k;
            }
        }
    }

    /// The protocol hash `H: {0,1}* -> G`.
    pub fn hash_to_group(&self, message: &[u8]) -> GroupElement {
        self.hash_to_group_in(HashDomain::Protocol, message)
    }

    /// Try-and-increment hashing onto the curve followed by cofactor clearing.
    pub fn hash_to_group_in(&self, domain: HashDomain, message: &[u8]) -> GroupElement {
        let f = &self.field;
        let width = byte_len(&f.p) + 16;
        let mut counter: u32 = 0;
        loop {
            let digest = expand_hash(domain.tag(), &[&counter.to_be_bytes(), message], width + 1);
            counter = counter.wrapping_add(1);
            let x = BigUint::from_bytes_be(&digest[..width]) % &f.p;
            let Some(mut y) = f.sqrt(&f.curve_rhs(&x)) else {
                continue;
            };
            if (digest[width] & 1 == 1) != y.bit(0) {
                y = f.neg(&y);
            }
            let point = curve::scalar_mul(f, &GroupElement::Affine { x, y }, &self.cofactor);
            if !point.is_identity() {
                return point;
            }
        }
    }

    /// Reduced symmetric Tate pairing `e(a, b)`.
    pub fn pairing(&self, a: &GroupElement, b: &GroupElement) -> GtElement {
        let (Some(pa), Some(pb)) = (a.coords(), b.coords()) else {
            return GtElement::identity();
        };
        let f = &self.field;
        let miller = self.miller_loop(pa, pb);
        // (p^2 - 1)/q = (p - 1)·h; the (p - 1) power is conj(m)/m.
        let Some(inv) = miller.inv(f) else {
            return GtElement::identity();
        };
        let unitary = miller.conjugate(f).mul(&inv, f);
        GtElement(unitary.pow(&self.cofactor, f))
    }

    /// Miller function `f_{q,A}` evaluated at the distorted image of `B`.
    ///
    /// `T` is kept in Jacobian coordinates and every line value is scaled by a
    /// nonzero element of `F_p`. Such factors, like the vertical lines, take values
    /// in `F_p` and vanish under the final exponentiation.
    fn miller_loop(&self, a: (&BigUint, &BigUint), b: (&BigUint, &BigUint)) -> Fp2 {
        let f = &self.field;
        let (xa, ya) = a;
        let (xb, yb) = b;

        let mut acc = Fp2::one();
        let mut t = Jacobian::from_affine(xa, ya);
        for bit in (0..self.q.bits() - 1).rev() {
            // tangent at T, scaled by 2Y·Z^3: M·(Z^2·x_B + X) - 2Y^2 + i·(2YZ)·Z^2·y_B
            let m = t.tangent_numerator(f);
            let zz = f.mul(&t.z, &t.z);
            let yy = f.mul(&t.y, &t.y);
            let doubled = t.double_with(f, &m);
            let line = Fp2 {
                re: f.sub(&f.mul(&m, &f.add(&f.mul(&zz, xb), &t.x)), &f.add(&yy, &yy)),
                im: f.mul(&f.mul(&doubled.z, &zz), yb),
            };
            acc = acc.square(f).mul(&line, f);
            t = doubled;

            if self.q.bit(bit) {
                let (h, r) = t.chord_terms(f, xa, ya);
                if h.is_zero() {
                    // T = -A: only reached on the final bit, vertical line.
                    break;
                }
                // chord through A with slope r/(H·Z), scaled by H·Z
                let added = t.add_with(f, &h, &r);
                let line = Fp2 {
                    re: f.sub(&f.mul(&r, &f.add(xb, xa)), &f.mul(&added.z, ya)),
                    im: f.mul(&added.z, yb),
                };
                acc = acc.mul(&line, f);
                t = added;
            }
        }
        acc
    }

    pub fn gt_mul(&self, a: &GtElement, b: &GtElement) -> GtElement {
        GtElement(a.0.mul(&b.0, &self.field))
    }

    pub fn gt_pow(&self, a: &GtElement, exp: &BigUint) -> GtElement {
        GtElement(a.0.pow(exp, &self.field))
    }

    /// Width of a compressed element encoding: one tag byte plus the x coordinate.
    pub fn element_len(&self) -> usize {
        1 + byte_len(&self.field.p)
    }

    /// Compressed encoding: `0x00‖0…0` for the identity, otherwise
    /// `(0x02 | parity(y))‖x` with `x` big-endian and fixed width.
    pub fn encode(&self, el: &GroupElement) -> Vec<u8> {
        let width = byte_len(&self.field.p);
        let mut out = Vec::with_capacity(width + 1);
        match el {
            GroupElement::Identity => {
                out.push(0);
                out.resize(width + 1, 0);
            }
            GroupElement::Affine { x, y } => {
                out.push(if y.bit(0) { 0x03 } else { 0x02 });
                out.extend_from_slice(&to_fixed_be(x, width));
            }
        }
        out
    }

    /// Inverse of [`GroupParams::encode`]; rejects points outside the order-`q` subgroup.
    pub fn decode(&self, bytes: &[u8]) -> Result<GroupElement, PairingError> {
        if bytes.len() != self.element_len() {
            return Err(PairingError::Decode("wrong length"));
        }
        let f = &self.field;
        let x = BigUint::from_bytes_be(&bytes[1..]);
        match bytes[0] {
            0x00 if x.is_zero() => Ok(GroupElement::Identity),
            tag @ (0x02 | 0x03) => {
                if x >= f.p {
                    return Err(PairingError::Decode("x not reduced"));
                }
                let mut y = f.sqrt(&f.curve_rhs(&x)).ok_or(PairingError::Decode("not on curve"))?;
                if y.bit(0) != (tag == 0x03) {
                    y = f.neg(&y);
                }
                let el = GroupElement::Affine { x, y };
                if !curve::scalar_mul(f, &el, &self.q).is_identity() {
                    return Err(PairingError::Decode("not in prime-order subgroup"));
                }
                Ok(el)
            }
            _ => Err(PairingError::Decode("bad tag byte")),
        }
    }

    /// Encoding of a target-group element: `re‖im`, each fixed width.
    pub fn encode_gt(&self, el: &GtElement) -> Vec<u8> {
        let width = byte_len(&self.field.p);
        let mut out = to_fixed_be(&el.0.re, width);
        out.extend_from_slice(&to_fixed_be(&el.0.im, width));
        out
    }
}
