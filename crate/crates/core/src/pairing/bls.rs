// SPDX-License-Identifier: Apache-2.0
//! Short signatures `σ = x·H(m)` and the aggregate checks built on them.

use num_bigint::BigUint;
use num_traits::Zero;
use rand_core::RngCore;

use super::{GroupElement, GroupParams, GtElement, HashDomain, PairingError};

/// Secret scalar `x ∈ Z*_q` and public key `Y = x·P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigKeypair {
    secret: BigUint,
    public: GroupElement,
}

impl SigKeypair {
    pub fn generate<R: RngCore + ?Sized>(params: &GroupParams, rng: &mut R) -> Self {
        let secret = params.random_scalar(rng);
        let public = params.mul_generator(&secret);
        Self { secret, public }
    }

    pub fn from_secret(params: &GroupParams, secret: BigUint) -> Result<Self, PairingError> {
        if secret.is_zero() || &secret >= params.order() {
            return Err(PairingError::InvalidKey);
        }
        let public = params.mul_generator(&secret);
        Ok(Self { secret, public })
    }

    pub fn secret(&self) -> &BigUint {
        &self.secret
    }

    pub fn public(&self) -> &GroupElement {
        &self.public
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSignature(pub GroupElement);

pub fn sign(params: &GroupParams, secret: &BigUint, message: &[u8]) -> Result<GroupSignature, PairingError> {
    if secret.is_zero() || secret >= params.order() {
        return Err(PairingError::InvalidKey);
    }
    let h = params.hash_to_group_in(HashDomain::Signature, message);
    Ok(GroupSignature(params.mul(&h, secret)))
}

/// `e(P, σ) == e(Y, H(m))`.
pub fn verify(params: &GroupParams, public: &GroupElement, message: &[u8], sig: &GroupSignature) -> bool {
    let h = params.hash_to_group_in(HashDomain::Signature, message);
    params.pairing(params.generator(), &sig.0) == params.pairing(public, &h)
}

/// One entry of a batch signature check.
#[derive(Clone, Copy, Debug)]
pub struct SignedMessage<'a> {
    pub public: &'a GroupElement,
    pub message: &'a [u8],
    pub signature: &'a GroupSignature,
}

/// Result of an aggregate check plus the number of pairings it evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BatchOutcome {
    pub valid: bool,
    pub pairings: usize,
}

/// `e(P, Σ σ_j) == Π e(Y_j, H(m_j))` using `len + 1` pairings.
///
/// Sum-based batching accepts whenever the aggregate equation holds, so two
/// corruptions that cancel in the sum are not detected; a single corrupted
/// signature always is.
pub fn batch_verify(params: &GroupParams, entries: &[SignedMessage<'_>]) -> Result<BatchOutcome, PairingError> {
    if entries.is_empty() {
        return Err(PairingError::EmptyBatch);
    }
    let sigma = params.sum(entries.iter().map(|e| &e.signature.0));
    let lhs = params.pairing(params.generator(), &sigma);
    let rhs = entries.iter().fold(GtElement::identity(), |acc, e| {
        let h = params.hash_to_group_in(HashDomain::Signature, e.message);
        params.gt_mul(&acc, &params.pairing(e.public, &h))
    });
    Ok(BatchOutcome {
        valid: lhs == rhs,
        pairings: entries.len() + 1,
    })
}

/// Processor public key with the two halves of its handshake with one customer.
#[derive(Clone, Copy, Debug)]
pub struct HandshakeTriple<'a> {
    pub processor_public: &'a GroupElement,
    /// `x_j·H(α_j + α_k)`, produced by the processor.
    pub proof_jk: &'a GroupElement,
    /// `x_k·H(α_k + α_j)`, produced by the customer.
    pub proof_kj: &'a GroupElement,
}

/// `e(Y_k, Σ proof_jk) == Π e(Y_j, proof_kj)` using `len + 1` pairings.
pub fn batch_verify_handshake(
    params: &GroupParams,
    customer_public: &GroupElement,
    pairs: &[HandshakeTriple<'_>],
) -> Result<BatchOutcome, PairingError> {
    if pairs.is_empty() {
        return Err(PairingError::EmptyBatch);
    }
    let aggregate = params.sum(pairs.iter().map(|t| t.proof_jk));
    let lhs = params.pairing(customer_public, &aggregate);
    let rhs = pairs.iter().fold(GtElement::identity(), |acc, t| {
        params.gt_mul(&acc, &params.pairing(t.processor_public, t.proof_kj))
    });
    Ok(BatchOutcome {
        valid: lhs == rhs,
        pairings: pairs.len() + 1,
    })
}

/// Single handshake check `e(Y_k, proof_jk) == e(Y_j, proof_kj)`.
pub fn verify_handshake(params: &GroupParams, customer_public: &GroupElement, triple: &HandshakeTriple<'_>) -> bool {
    params.pairing(customer_public, triple.proof_jk) == params.pairing(triple.processor_public, triple.proof_kj)
}
