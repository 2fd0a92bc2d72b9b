// SPDX-License-Identifier: Apache-2.0
//! Customer role: task announcement, handshake completion and the customer report.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand_core::RngCore;

use super::identity::{Identity, Pid, RealId};
use super::messages::{CustomerReport, HandshakeResponse, TaskAnnouncement};
use super::{handshake_point, ProtocolError, TaskId};
use crate::bigint::random_below;
use crate::paillier::{keygen, PaillierKeypair, PublicModulus};
use crate::pairing::{sign, GroupElement, GroupParams, GroupSignature, SigKeypair};
use crate::token::TrustToken;

#[derive(Clone, Debug)]
struct OpenTask {
    alpha_k: BigUint,
    ephemeral: PaillierKeypair,
    proofs: Vec<(Pid, GroupElement)>,
}

#[derive(Clone, Debug)]
pub struct Customer {
    index: u32,
    identity: Identity,
    group: GroupParams,
    modulus: PublicModulus,
    token: TrustToken,
    ephemeral_bits: u64,
    tasks: BTreeMap<TaskId, OpenTask>,
}

impl Customer {
    pub(crate) fn new(
        index: u32,
        identity: Identity,
        group: GroupParams,
        modulus: PublicModulus,
        token: TrustToken,
        ephemeral_bits: u64,
    ) -> Self {
        Self {
            index,
            identity,
            group,
            modulus,
            token,
            ephemeral_bits,
            tasks: BTreeMap::new(),
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn real_id(&self) -> &RealId {
        &self.identity.real_id
    }

    pub fn modulus(&self) -> &PublicModulus {
        &self.modulus
    }

    pub fn token(&self) -> &TrustToken {
        &self.token
    }

    /// Task handle `ph_k`: the customer's first pseudonym.
    pub fn ph_k(&self) -> &Pid {
        &self.identity.pseudonyms[0].pid
    }

    fn keys(&self) -> &SigKeypair {
        &self.identity.pseudonyms[0].keys
    }

    pub fn public_key(&self) -> &GroupElement {
        self.keys().public()
    }

    /// Publishes a task with a fresh `α_k` and a fresh per-task Paillier key.
    pub fn announce<R: RngCore + ?Sized>(
        &mut self,
        task: TaskId,
        rng: &mut R,
    ) -> Result<TaskAnnouncement, ProtocolError> {
        let ephemeral = keygen(self.ephemeral_bits, rng)?;
        let alpha_k = random_below(rng, ephemeral.public.n());
        let announcement = TaskAnnouncement {
            ph_k: self.ph_k().clone(),
            customer_public: self.public_key().clone(),
            task,
            alpha_k: alpha_k.clone(),
            ephemeral: ephemeral.public.clone(),
        };
        self.tasks.insert(
            task,
            OpenTask {
                alpha_k,
                ephemeral,
                proofs: Vec::new(),
            },
        );
        Ok(announcement)
    }

    /// Recovers `α_j` and records `proof_kj = x_k·H(α_k + α_j)` for the responding pseudonym.
    pub fn accept(&mut self, task: TaskId, response: &HandshakeResponse) -> Result<BigUint, ProtocolError> {
        let open = self.tasks.get(&task).ok_or(ProtocolError::NoActiveTask(task))?;
        let alpha_j = open
            .ephemeral
            .secret
            .decrypt(&open.ephemeral.public, &response.c_alpha)
            .map_err(|_| ProtocolError::HandshakeFailure)?;
        let point = handshake_point(&self.group, &open.alpha_k, &alpha_j);
        let proof_kj = self.group.mul(&point, self.keys().secret());
        let open = self.tasks.get_mut(&task).ok_or(ProtocolError::NoActiveTask(task))?;
        open.proofs.retain(|(p, _)| p != &response.pid);
        open.proofs.push((response.pid.clone(), proof_kj));
        Ok(alpha_j)
    }

    pub fn proof_for(&self, task: TaskId, pid: &Pid) -> Option<&GroupElement> {
        self.tasks
            .get(&task)
            .and_then(|t| t.proofs.iter().find(|(p, _)| p == pid))
            .map(|(_, e)| e)
    }

    /// Closes the task and signs `R_k` over all collected `proof_kj`.
    pub fn make_report(&mut self, task: TaskId) -> Result<CustomerReport, ProtocolError> {
        let open = self.tasks.remove(&task).ok_or(ProtocolError::NoActiveTask(task))?;
        let mut report = CustomerReport {
            ph_k: self.ph_k().clone(),
            public: self.public_key().clone(),
            task,
            proofs: open.proofs,
            signature: GroupSignature(GroupElement::Identity),
        };
        let bytes = report.signing_bytes(&self.group);
        report.signature = sign(&self.group, self.keys().secret(), &bytes)?;
        Ok(report)
    }
}
