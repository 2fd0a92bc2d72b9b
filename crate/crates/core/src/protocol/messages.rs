// SPDX-License-Identifier: Apache-2.0
//! Messages exchanged during a task and their canonical encodings.
//!
//! Signatures cover the encoding of every field except the signature itself.

use alloc::vec::Vec;

use num_bigint::BigUint;

use super::identity::Pid;
use super::wire::{Reader, Writer};
use super::{ProtocolError, TaskId};
use crate::paillier::{Ciphertext, PaillierPublicKey, PublicModulus};
use crate::pairing::{GroupElement, GroupParams, GroupSignature};
use crate::token::TrustToken;

const PROCESSOR_LABEL: &[u8] = b"TPCS-R-PROC-v1";
const CUSTOMER_LABEL: &[u8] = b"TPCS-R-CUST-v1";
const AGGREGATE_LABEL: &[u8] = b"TPCS-R-RSU-v1";

/// Broadcast by a customer when it publishes a task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskAnnouncement {
    pub ph_k: Pid,
    pub customer_public: GroupElement,
    pub task: TaskId,
    pub alpha_k: BigUint,
    /// Per-task key under which processors return their `α_j`.
    pub ephemeral: PaillierPublicKey,
}

/// A processor's reply: its pseudonym, key and `Enc(α_j)` under the customer's ephemeral key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakeResponse {
    pub pid: Pid,
    pub public: GroupElement,
    pub c_alpha: Ciphertext,
}

/// Both halves of a completed handshake.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HandshakeProof {
    pub alpha_k: BigUint,
    pub alpha_j: BigUint,
    /// `x_k·H(α_k + α_j)`
    pub proof_kj: GroupElement,
    /// `x_j·H(α_j + α_k)`
    pub proof_jk: GroupElement,
}

/// `FR_j`: which task the feedback is about and the feedback itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackReport {
    pub ph_k: Pid,
    pub task: TaskId,
    pub feedback: f64,
}

/// `R_j = (PID_j, Y_j, FR_j, TR_j, proof_jk, σ_j)`
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessorReport {
    pub pid: Pid,
    pub public: GroupElement,
    pub feedback: FeedbackReport,
    pub token: TrustToken,
    pub proof_jk: GroupElement,
    pub signature: GroupSignature,
}

impl ProcessorReport {
    pub fn signing_bytes(&self, group: &GroupParams, modulus: &PublicModulus) -> Vec<u8> {
        self.writer(group, modulus).finish()
    }

    fn writer(&self, group: &GroupParams, modulus: &PublicModulus) -> Writer {
        let mut w = Writer::new(PROCESSOR_LABEL);
        w.bytes(&self.pid.0)
            .bytes(&group.encode(&self.public))
            .bytes(&self.feedback.ph_k.0)
            .u64(self.feedback.task.0)
            .f64(self.feedback.feedback)
            .bytes(&self.token.to_bytes(modulus))
            .bytes(&group.encode(&self.proof_jk));
        w
    }

    pub fn to_bytes(&self, group: &GroupParams, modulus: &PublicModulus) -> Vec<u8> {
        let mut w = self.writer(group, modulus);
        w.bytes(&group.encode(&self.signature.0));
        w.finish()
    }

    pub fn from_bytes(group: &GroupParams, modulus: &PublicModulus, bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes, PROCESSOR_LABEL)?;
        let pid = Pid(r.bytes()?.to_vec());
        let public = group.decode(r.bytes()?)?;
        let ph_k = Pid(r.bytes()?.to_vec());
        let task = TaskId(r.u64()?);
        let feedback = r.f64()?;
        let token = TrustToken::from_bytes(modulus, r.bytes()?)?;
        let proof_jk = group.decode(r.bytes()?)?;
        let signature = GroupSignature(group.decode(r.bytes()?)?);
        r.finish()?;
        Ok(Self {
            pid,
            public,
            feedback: FeedbackReport { ph_k, task, feedback },
            token,
            proof_jk,
            signature,
        })
    }
}

/// `R_k`: the customer's half of every handshake, keyed by processor pseudonym.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CustomerReport {
    pub ph_k: Pid,
    pub public: GroupElement,
    pub task: TaskId,
    pub proofs: Vec<(Pid, GroupElement)>,
    pub signature: GroupSignature,
}

impl CustomerReport {
    pub fn signing_bytes(&self, group: &GroupParams) -> Vec<u8> {
        self.writer(group).finish()
    }

    fn writer(&self, group: &GroupParams) -> Writer {
        let mut w = Writer::new(CUSTOMER_LABEL);
        w.bytes(&self.ph_k.0)
            .bytes(&group.encode(&self.public))
            .u64(self.task.0)
            .u64(self.proofs.len() as u64);
        for (pid, proof) in &self.proofs {
            w.bytes(&pid.0).bytes(&group.encode(proof));
        }
        w
    }

    pub fn to_bytes(&self, group: &GroupParams) -> Vec<u8> {
        let mut w = self.writer(group);
        w.bytes(&group.encode(&self.signature.0));
        w.finish()
    }

    pub fn from_bytes(group: &GroupParams, bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes, CUSTOMER_LABEL)?;
        let ph_k = Pid(r.bytes()?.to_vec());
        let public = group.decode(r.bytes()?)?;
        let task = TaskId(r.u64()?);
        let count = r.u64()?;
        let mut proofs = Vec::new();
        for _ in 0..count {
            let pid = Pid(r.bytes()?.to_vec());
            proofs.push((pid, group.decode(r.bytes()?)?));
        }
        let signature = GroupSignature(group.decode(r.bytes()?)?);
        r.finish()?;
        Ok(Self {
            ph_k,
            public,
            task,
            proofs,
            signature,
        })
    }

    pub fn proof_for(&self, pid: &Pid) -> Option<&GroupElement> {
        self.proofs.iter().find(|(p, _)| p == pid).map(|(_, e)| e)
    }
}

/// `R_r`: one RSU's homomorphic aggregate for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregatedReport {
    pub rsu: u32,
    pub ph_k: Pid,
    pub task: TaskId,
    /// `Π C̃_j^(f̂_j)`, an encryption of `Σ T̂_j·f̂_j`.
    pub c1: Ciphertext,
    /// `Π C̃_j`, an encryption of `Σ T̂_j`.
    pub c2: Ciphertext,
    pub entries: Vec<(Pid, f64)>,
    pub signature: GroupSignature,
}

impl AggregatedReport {
    pub fn signing_bytes(&self, modulus: &PublicModulus) -> Vec<u8> {
        self.writer(modulus).finish()
    }

    fn writer(&self, modulus: &PublicModulus) -> Writer {
        let mut w = Writer::new(AGGREGATE_LABEL);
        w.u64(u64::from(self.rsu))
            .bytes(&self.ph_k.0)
            .u64(self.task.0)
            .bytes(&self.c1.to_bytes(modulus))
            .bytes(&self.c2.to_bytes(modulus))
            .u64(self.entries.len() as u64);
        for (pid, f) in &self.entries {
            w.bytes(&pid.0).f64(*f);
        }
        w
    }

    pub fn to_bytes(&self, group: &GroupParams, modulus: &PublicModulus) -> Vec<u8> {
        let mut w = self.writer(modulus);
        w.bytes(&group.encode(&self.signature.0));
        w.finish()
    }

    pub fn from_bytes(group: &GroupParams, modulus: &PublicModulus, bytes: &[u8]) -> Result<Self, ProtocolError> {
        let mut r = Reader::new(bytes, AGGREGATE_LABEL)?;
        let rsu = u32::try_from(r.u64()?).map_err(|_| ProtocolError::Decode("rsu index"))?;
        let ph_k = Pid(r.bytes()?.to_vec());
        let task = TaskId(r.u64()?);
        let c1 = Ciphertext::from_bytes(modulus, r.bytes()?)?;
        let c2 = Ciphertext::from_bytes(modulus, r.bytes()?)?;
        let count = r.u64()?;
        let mut entries = Vec::new();
        for _ in 0..count {
            let pid = Pid(r.bytes()?.to_vec());
            entries.push((pid, r.f64()?));
        }
        let signature = GroupSignature(group.decode(r.bytes()?)?);
        r.finish()?;
        Ok(Self {
            rsu,
            ph_k,
            task,
            c1,
            c2,
            entries,
            signature,
        })
    }
}
