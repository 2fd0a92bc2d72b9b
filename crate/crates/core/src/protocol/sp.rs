// SPDX-License-Identifier: Apache-2.0
//! Service provider role: decryption, customer scoring and ranking.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::Zero;

use super::identity::Pid;
use super::messages::AggregatedReport;
use super::{CheckKind, OpRecord, ProtocolError, TaskId};
use crate::codec::FixedPointCodec;
use crate::paillier::{Ciphertext, PaillierKeypair, PaillierPublicKey};
use crate::pairing::{verify, GroupElement, GroupParams};
use crate::reputation::{run_truth_discovery, trust_quality, EngineConfig, TruthDiscovery};

/// Decrypted aggregate for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct SpScore {
    pub ph_k: Pid,
    pub task: TaskId,
    /// `D(C1) = Σ T̂·f̂`
    pub weighted: BigUint,
    /// `D(C2) = Σ T̂`
    pub total: BigUint,
    /// `D(C1) / (D(C2)·S_F)`
    pub rs0: f64,
    pub feedback: Vec<(Pid, f64)>,
    pub ops: Vec<OpRecord>,
}

/// Truth-discovery result plus the per-pseudonym quality sent to the TA.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskEvaluation {
    pub ph_k: Pid,
    pub task: TaskId,
    pub rs0: f64,
    pub discovery: TruthDiscovery,
    pub qualities: Vec<(Pid, f64)>,
}

#[derive(Clone, Debug)]
pub struct ServiceProvider {
    group: GroupParams,
    keypair: PaillierKeypair,
    rsu_keys: Vec<GroupElement>,
    codec: FixedPointCodec,
    engine: EngineConfig,
    reputations: BTreeMap<Pid, (TaskId, f64)>,
}

impl ServiceProvider {
    pub(crate) fn new(
        group: GroupParams,
        keypair: PaillierKeypair,
        rsu_keys: Vec<GroupElement>,
        codec: FixedPointCodec,
        engine: EngineConfig,
    ) -> Self {
        Self {
            group,
            keypair,
            rsu_keys,
            codec,
            engine,
            reputations: BTreeMap::new(),
        }
    }

    pub fn paillier_public(&self) -> &PaillierPublicKey {
        &self.keypair.public
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    pub fn set_engine(&mut self, engine: EngineConfig) {
        self.engine = engine;
    }

    /// Checks each RSU signature, multiplies the shards' `C1` and `C2`, decrypts
    /// and forms the initial score as an exact ratio.
    pub fn score(&self, aggregates: &[AggregatedReport]) -> Result<SpScore, ProtocolError> {
        let first = aggregates.first().ok_or(ProtocolError::EmptyAggregate)?;
        let pk = &self.keypair.public;
        let modulus = pk.modulus();
        let mut ops = Vec::with_capacity(aggregates.len());
        let mut c1 = Ciphertext(BigUint::from(1u32));
        let mut c2 = Ciphertext(BigUint::from(1u32));
        let mut feedback = Vec::new();
        for agg in aggregates {
            if agg.ph_k != first.ph_k || agg.task != first.task {
                return Err(ProtocolError::AggregateMismatch);
            }
            let key = self
                .rsu_keys
                .get(agg.rsu as usize)
                .ok_or(ProtocolError::InvalidAggregate(agg.rsu))?;
            ops.push(OpRecord {
                check: CheckKind::AggregateSignature,
                pairings: 2,
                batch_size: 1,
            });
            if !verify(&self.group, key, &agg.signing_bytes(modulus), &agg.signature) {
                return Err(ProtocolError::InvalidAggregate(agg.rsu));
            }
            c1 = modulus.add(&c1, &agg.c1);
            c2 = modulus.add(&c2, &agg.c2);
            feedback.extend(agg.entries.iter().cloned());
        }
        let weighted = self.keypair.secret.decrypt(pk, &c1)?;
        let total = self.keypair.secret.decrypt(pk, &c2)?;
        if total.is_zero() {
            return Err(ProtocolError::DegenerateAggregate);
        }
        let rs0 = self
            .codec
            .weighted_ratio(&weighted, &total)
            .ok_or(ProtocolError::DegenerateAggregate)?;
        Ok(SpScore {
            ph_k: first.ph_k.clone(),
            task: first.task,
            weighted,
            total,
            rs0,
            feedback,
            ops,
        })
    }

    /// Runs truth discovery from `rs0`, records the customer's reputation and
    /// rates every participating pseudonym.
    pub fn evaluate(&mut self, score: &SpScore) -> Result<TaskEvaluation, ProtocolError> {
        let values: Vec<f64> = score.feedback.iter().map(|(_, f)| *f).collect();
        let discovery = run_truth_discovery(score.rs0, &values, &self.engine)?;
        let qualities = score
            .feedback
            .iter()
            .map(|(pid, f)| {
                (
                    pid.clone(),
                    trust_quality(*f, discovery.rs, discovery.iterations, &self.engine),
                )
            })
            .collect();
        self.reputations.insert(score.ph_k.clone(), (score.task, discovery.rs));
        Ok(TaskEvaluation {
            ph_k: score.ph_k.clone(),
            task: score.task,
            rs0: score.rs0,
            discovery,
            qualities,
        })
    }

    /// Latest reputation of `ph_k`, if it has been scored.
    pub fn reputation(&self, ph_k: &Pid) -> Option<f64> {
        self.reputations.get(ph_k).map(|(_, rs)| *rs)
    }

    /// Customers by latest reputation, highest first; ties by handle ascending.
    pub fn query_customers(&self) -> Vec<(Pid, f64)> {
        let mut ranked: Vec<(Pid, f64)> = self.reputations.iter().map(|(p, (_, rs))| (p.clone(), *rs)).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked
    }
}
