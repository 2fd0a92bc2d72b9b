// SPDX-License-Identifier: Apache-2.0
//! Processor role: handshakes with customers and signed feedback reports.

use alloc::collections::BTreeMap;

use num_bigint::BigUint;
use rand_core::RngCore;

use super::identity::{Identity, Pid, Pseudonym, RealId};
use super::messages::{FeedbackReport, HandshakeResponse, ProcessorReport, TaskAnnouncement};
use super::{handshake_point, ProtocolError, TaskId};
use crate::bigint::random_below;
use crate::paillier::PublicModulus;
use crate::pairing::{sign, GroupElement, GroupParams, GroupSignature};
use crate::token::TrustToken;

/// Unlinkability switches; both are on in the protocol proper.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProcessorPolicy {
    pub perturb_tokens: bool,
    pub rotate_pseudonyms: bool,
}

impl Default for ProcessorPolicy {
    fn default() -> Self {
        Self {
            perturb_tokens: true,
            rotate_pseudonyms: true,
        }
    }
}

#[derive(Clone, Debug)]
struct ActiveTask {
    pseudonym: usize,
    ph_k: Pid,
    alpha_j: BigUint,
    proof_jk: GroupElement,
}

#[derive(Clone, Debug)]
pub struct Processor {
    index: u32,
    identity: Identity,
    group: GroupParams,
    modulus: PublicModulus,
    token: TrustToken,
    policy: ProcessorPolicy,
    cursor: usize,
    wraps: u32,
    active: BTreeMap<TaskId, ActiveTask>,
}

impl Processor {
    pub(crate) fn new(
        index: u32,
        identity: Identity,
        group: GroupParams,
        modulus: PublicModulus,
        token: TrustToken,
    ) -> Self {
        Self {
            index,
            identity,
            group,
            modulus,
            token,
            policy: ProcessorPolicy::default(),
            cursor: 0,
            wraps: 0,
            active: BTreeMap::new(),
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn real_id(&self) -> &RealId {
        &self.identity.real_id
    }

    pub fn identity(&self) -> &Identity {
        &self.identity
    }

    pub fn token(&self) -> &TrustToken {
        &self.token
    }

    pub fn modulus(&self) -> &PublicModulus {
        &self.modulus
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn install_token(&mut self, token: TrustToken) {
        self.token = token;
    }

    pub fn policy(&self) -> ProcessorPolicy {
        self.policy
    }

    pub fn set_policy(&mut self, policy: ProcessorPolicy) {
        self.policy = policy;
    }

    /// How many times the pseudonym schedule has wrapped around.
    pub fn pseudonym_wraps(&self) -> u32 {
        self.wraps
    }

    fn next_pseudonym(&mut self) -> usize {
        if !self.policy.rotate_pseudonyms {
            return 0;
        }
        let idx = self.cursor;
        self.cursor += 1;
        if self.cursor == self.identity.pseudonyms.len() {
            self.cursor = 0;
            self.wraps += 1;
            if self.wraps == 1 {
                log::warn!(
                    "{} exhausted its pseudonyms; reusing them cyclically",
                    self.identity.real_id
                );
            } else {
                log::debug!("{} pseudonym schedule wrapped ({})", self.identity.real_id, self.wraps);
            }
        }
        idx
    }

    fn pseudonym(&self, idx: usize) -> &Pseudonym {
        &self.identity.pseudonyms[idx]
    }

    /// Joins a task: picks a pseudonym and `α_j`, returns `Enc_k(α_j)` and keeps `proof_jk`.
    pub fn respond<R: RngCore + ?Sized>(
        &mut self,
        announcement: &TaskAnnouncement,
        rng: &mut R,
    ) -> Result<HandshakeResponse, ProtocolError> {
        let idx = self.next_pseudonym();
        let alpha_j = random_below(rng, announcement.ephemeral.n());
        let c_alpha = announcement.ephemeral.encrypt_random(&alpha_j, rng)?;
        let point = handshake_point(&self.group, &alpha_j, &announcement.alpha_k);
        let keys = &self.pseudonym(idx).keys;
        let proof_jk = self.group.mul(&point, keys.secret());
        let response = HandshakeResponse {
            pid: self.pseudonym(idx).pid.clone(),
            public: keys.public().clone(),
            c_alpha,
        };
        self.active.insert(
            announcement.task,
            ActiveTask {
                pseudonym: idx,
                ph_k: announcement.ph_k.clone(),
                alpha_j,
                proof_jk,
            },
        );
        Ok(response)
    }

    /// `(α_j, proof_jk)` for a task joined but not yet reported.
    pub fn handshake_state(&self, task: TaskId) -> Option<(&BigUint, &GroupElement)> {
        self.active.get(&task).map(|a| (&a.alpha_j, &a.proof_jk))
    }

    /// Pseudonym used for a task joined but not yet reported.
    pub fn task_pid(&self, task: TaskId) -> Option<&Pid> {
        self.active.get(&task).map(|a| &self.pseudonym(a.pseudonym).pid)
    }

    /// Signs a report carrying the current token, perturbed once.
    pub fn make_report<R: RngCore + ?Sized>(
        &mut self,
        task: TaskId,
        feedback: f64,
        rng: &mut R,
    ) -> Result<ProcessorReport, ProtocolError> {
        let token = self.token.clone();
        self.make_report_with_token(task, feedback, token, rng)
    }

    /// Signs a report carrying an arbitrary token, perturbed once if the policy says so.
    pub fn make_report_with_token<R: RngCore + ?Sized>(
        &mut self,
        task: TaskId,
        feedback: f64,
        token: TrustToken,
        rng: &mut R,
    ) -> Result<ProcessorReport, ProtocolError> {
        let active = self.active.remove(&task).ok_or(ProtocolError::NoActiveTask(task))?;
        let token = if self.policy.perturb_tokens {
            token.perturb(&self.modulus, rng)
        } else {
            token
        };
        let pseudonym = &self.identity.pseudonyms[active.pseudonym];
        let mut report = ProcessorReport {
            pid: pseudonym.pid.clone(),
            public: pseudonym.keys.public().clone(),
            feedback: FeedbackReport {
                ph_k: active.ph_k,
                task,
                feedback,
            },
            token,
            proof_jk: active.proof_jk,
            signature: GroupSignature(GroupElement::Identity),
        };
        let bytes = report.signing_bytes(&self.group, &self.modulus);
        report.signature = sign(&self.group, pseudonym.keys.secret(), &bytes)?;
        Ok(report)
    }
}
