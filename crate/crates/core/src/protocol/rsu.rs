// SPDX-License-Identifier: Apache-2.0
//! RSU role: report verification and homomorphic aggregation.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigUint;

use super::identity::Pid;
use super::messages::{AggregatedReport, CustomerReport, ProcessorReport};
use super::{CheckKind, OpRecord, ProtocolError, RejectReason, Rejection};
use crate::codec::{FixedPointCodec, Quantity};
use crate::paillier::{Ciphertext, PaillierPublicKey};
use crate::pairing::{
    batch_verify, batch_verify_handshake, sign, verify, verify_handshake, BatchOutcome, GroupElement, GroupParams,
    GroupSignature, HandshakeTriple, SigKeypair, SignedMessage,
};
use crate::token::{batch_verify_fresh, verify_fresh, Epoch, EpochSecret};

/// Whether signature and handshake checks run aggregated or one by one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VerifyMode {
    #[default]
    Batch,
    Individual,
}

/// Result of processing one task's reports at one RSU.
#[derive(Clone, Debug, PartialEq)]
pub struct RsuOutcome {
    /// `None` when every report was rejected.
    pub aggregate: Option<AggregatedReport>,
    /// Accepted pseudonyms in aggregation order.
    pub accepted: Vec<Pid>,
    pub rejections: Vec<Rejection>,
    pub ops: Vec<OpRecord>,
    /// Modular exponentiations mod `n^2` spent on freshness checks and aggregation.
    pub modexps: u64,
    pub submitted: usize,
}

impl RsuOutcome {
    pub fn into_aggregate(self) -> Result<AggregatedReport, ProtocolError> {
        self.aggregate.ok_or(ProtocolError::EmptyAggregate)
    }

    pub fn pairings(&self) -> usize {
        self.ops.iter().map(|o| o.pairings).sum()
    }
}

#[derive(Clone, Debug)]
pub struct RoadsideUnit {
    index: u32,
    group: GroupParams,
    pk: PaillierPublicKey,
    chi: EpochSecret,
    kappa1: u64,
    keys: SigKeypair,
    codec: FixedPointCodec,
    mode: VerifyMode,
}

struct Stage<'a> {
    live: Vec<usize>,
    rejections: &'a mut Vec<Rejection>,
    ops: &'a mut Vec<OpRecord>,
    reports: &'a [ProcessorReport],
}

impl Stage<'_> {
    fn reject(&mut self, i: usize, reason: RejectReason) {
        self.rejections.push(Rejection {
            pid: self.reports[i].pid.clone(),
            reason,
        });
    }

    /// Runs a pairing check over `live`: aggregated first, then one by one if the
    /// aggregate fails (or straight away in individual mode).
    fn pairing_check(
        &mut self,
        mode: VerifyMode,
        kinds: (CheckKind, CheckKind),
        reason: RejectReason,
        batch: impl Fn(&[usize]) -> Result<BatchOutcome, ProtocolError>,
        single: impl Fn(usize) -> bool,
    ) -> Result<(), ProtocolError> {
        if self.live.is_empty() {
            return Ok(());
        }
        if mode == VerifyMode::Batch {
            let out = batch(&self.live)?;
            self.ops.push(OpRecord {
                check: kinds.0,
                pairings: out.pairings,
                batch_size: self.live.len(),
            });
            if out.valid {
                return Ok(());
            }
            log::debug!("{} failed for {} reports; isolating", kinds.0.as_str(), self.live.len());
        }
        self.ops.push(OpRecord {
            check: kinds.1,
            pairings: 2 * self.live.len(),
            batch_size: self.live.len(),
        });
        let live = core::mem::take(&mut self.live);
        for i in live {
            if single(i) {
                self.live.push(i);
            } else {
                self.reject(i, reason);
            }
        }
        Ok(())
    }
}

impl RoadsideUnit {
    pub(crate) fn new(
        index: u32,
        group: GroupParams,
        pk: PaillierPublicKey,
        chi: EpochSecret,
        kappa1: u64,
        keys: SigKeypair,
        codec: FixedPointCodec,
    ) -> Self {
        Self {
            index,
            group,
            pk,
            chi,
            kappa1,
            keys,
            codec,
            mode: VerifyMode::Batch,
        }
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn public_key(&self) -> &GroupElement {
        self.keys.public()
    }

    pub fn paillier_public(&self) -> &PaillierPublicKey {
        &self.pk
    }

    pub fn mode(&self) -> VerifyMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: VerifyMode) {
        self.mode = mode;
    }

    /// Verifies a task's reports and aggregates the accepted ones.
    ///
    /// Order: customer signature, structural checks, report signatures,
    /// handshakes, trust freshness. Survivors are sorted by pseudonym and folded
    /// into `C1 = Π C̃^(f̂)` and `C2 = Π C̃`.
    pub fn process(
        &self,
        customer: &CustomerReport,
        reports: &[ProcessorReport],
        epoch: Epoch,
    ) -> Result<RsuOutcome, ProtocolError> {
        let group = &self.group;
        let modulus = self.pk.modulus();
        let mut ops = Vec::new();
        let mut rejections = Vec::new();

        ops.push(OpRecord {
            check: CheckKind::CustomerSignature,
            pairings: 2,
            batch_size: 1,
        });
        if !verify(
            group,
            &customer.public,
            &customer.signing_bytes(group),
            &customer.signature,
        ) {
            return Err(ProtocolError::InvalidCustomerReport);
        }

        let mut stage = Stage {
            live: Vec::new(),
            rejections: &mut rejections,
            ops: &mut ops,
            reports,
        };
        let mut seen = BTreeSet::new();
        for (i, r) in reports.iter().enumerate() {
            let fb = &r.feedback;
            let well_formed = fb.task == customer.task
                && fb.ph_k == customer.ph_k
                && (0.0..=1.0).contains(&fb.feedback)
                && group.contains(&r.public)
                && group.contains(&r.proof_jk);
            if !well_formed {
                stage.reject(i, RejectReason::Malformed);
            } else if !seen.insert(&r.pid) {
                stage.reject(i, RejectReason::Duplicate);
            } else {
                stage.live.push(i);
            }
        }

        let messages: Vec<Vec<u8>> = reports.iter().map(|r| r.signing_bytes(group, modulus)).collect();
        stage.pairing_check(
            self.mode,
            (CheckKind::ReportSignatureBatch, CheckKind::ReportSignatureIndividual),
            RejectReason::Signature,
            |live| {
                let entries: Vec<_> = live
                    .iter()
                    .map(|&i| SignedMessage {
                        public: &reports[i].public,
                        message: &messages[i],
                        signature: &reports[i].signature,
                    })
                    .collect();
                Ok(batch_verify(group, &entries)?)
            },
            |i| verify(group, &reports[i].public, &messages[i], &reports[i].signature),
        )?;

        let live = core::mem::take(&mut stage.live);
        for i in live {
            if customer.proof_for(&reports[i].pid).is_some() {
                stage.live.push(i);
            } else {
                stage.reject(i, RejectReason::Handshake);
            }
        }
        let triple = |i: usize| HandshakeTriple {
            processor_public: &reports[i].public,
            proof_jk: &reports[i].proof_jk,
            proof_kj: customer.proof_for(&reports[i].pid).expect("filtered above"),
        };
        stage.pairing_check(
            self.mode,
            (CheckKind::HandshakeBatch, CheckKind::HandshakeIndividual),
            RejectReason::Handshake,
            |live| {
                let triples: Vec<_> = live.iter().map(|&i| triple(i)).collect();
                Ok(batch_verify_handshake(group, &customer.public, &triples)?)
            },
            |i| verify_handshake(group, &customer.public, &triple(i)),
        )?;

        let mut modexps = 0u64;
        let live = core::mem::take(&mut stage.live);
        for i in live {
            if reports[i].token.epoch == epoch {
                stage.live.push(i);
            } else {
                stage.reject(i, RejectReason::FakeTrust);
            }
        }
        if !stage.live.is_empty() {
            let tokens: Vec<_> = stage.live.iter().map(|&i| &reports[i].token).collect();
            modexps += 2;
            if !batch_verify_fresh(&self.pk, &self.chi, self.kappa1, &tokens, epoch)? {
                let live = core::mem::take(&mut stage.live);
                for i in live {
                    modexps += 2;
                    if verify_fresh(&self.pk, &self.chi, self.kappa1, &reports[i].token, epoch) {
                        stage.live.push(i);
                    } else {
                        stage.reject(i, RejectReason::FakeTrust);
                    }
                }
            }
        }

        let mut accepted = core::mem::take(&mut stage.live);
        accepted.sort_by(|&a, &b| reports[a].pid.cmp(&reports[b].pid));
        let accepted_pids: Vec<Pid> = accepted.iter().map(|&i| reports[i].pid.clone()).collect();
        for r in &rejections {
            log::debug!("RSU{} rejected {} ({})", self.index, r.pid, r.reason);
        }
        if accepted.is_empty() {
            return Ok(RsuOutcome {
                aggregate: None,
                accepted: accepted_pids,
                rejections,
                ops,
                modexps,
                submitted: reports.len(),
            });
        }

        let n2 = modulus.n_squared();
        let mut c1 = BigUint::from(1u32);
        let mut c2 = BigUint::from(1u32);
        let mut entries = Vec::with_capacity(accepted.len());
        for &i in &accepted {
            let r = &reports[i];
            let f_hat = BigUint::from(self.codec.encode(r.feedback.feedback, Quantity::Feedback)?);
            c1 = (c1 * self.pk.scalar_mul(&r.token.c_trust, &f_hat)?.0) % n2;
            c2 = (c2 * &r.token.c_trust.0) % n2;
            modexps += 1;
            entries.push((r.pid.clone(), r.feedback.feedback));
        }
        let mut aggregate = AggregatedReport {
            rsu: self.index,
            ph_k: customer.ph_k.clone(),
            task: customer.task,
            c1: Ciphertext(c1),
            c2: Ciphertext(c2),
            entries,
            signature: GroupSignature(GroupElement::Identity),
        };
        aggregate.signature = sign(group, self.keys.secret(), &aggregate.signing_bytes(modulus))?;
        Ok(RsuOutcome {
            aggregate: Some(aggregate),
            accepted: accepted_pids,
            rejections,
            ops,
            modexps,
            submitted: reports.len(),
        })
    }
}
