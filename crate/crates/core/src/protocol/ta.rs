// SPDX-License-Identifier: Apache-2.0
//! Trust authority: registration, trust ledger and token re-issuance.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigUint;
use rand_core::RngCore;

use super::identity::{Identity, Pid, PidCipher, RealId};
use super::ProtocolError;
use crate::codec::{FixedPointCodec, Quantity};
use crate::paillier::PaillierKeypair;
use crate::pairing::GroupParams;
use crate::reputation::{circuit_breaker, ewma_predict, BreakerState, EngineConfig};
use crate::token::{issue, Epoch, EpochSecret, TrustToken};

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    /// Observed trust per round, starting with `T0`.
    pub history: Vec<f64>,
    pub breaker: BreakerState,
    /// Trust carried by the next token.
    pub predicted: f64,
    /// Epochs in which the breaker tripped.
    pub breaker_events: Vec<Epoch>,
}

impl LedgerEntry {
    fn new(t0: f64) -> Self {
        Self {
            history: alloc::vec![t0],
            breaker: BreakerState::default(),
            predicted: t0,
            breaker_events: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrustLedger {
    entries: BTreeMap<RealId, LedgerEntry>,
}

impl TrustLedger {
    pub fn get(&self, id: &RealId) -> Option<&LedgerEntry> {
        self.entries.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RealId, &LedgerEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Folds one round of per-task qualities into the history of `id`.
    ///
    /// The round's trust is the mean of the qualities; the next trust is the
    /// EWMA prediction passed through the circuit breaker.
    pub fn observe(&mut self, id: &RealId, qualities: &[f64], epoch: Epoch, cfg: &EngineConfig) -> Option<bool> {
        let entry = self.entries.get_mut(id)?;
        if qualities.is_empty() {
            return Some(false);
        }
        let current = (qualities.iter().sum::<f64>() / qualities.len() as f64).clamp(0.0, 1.0);
        let previous = *entry.history.last().expect("history starts with T0");
        entry.history.push(current);
        let predicted = ewma_predict(previous, current, cfg);
        let (next, breaker) = circuit_breaker(previous, current, predicted, entry.breaker, cfg);
        let tripped = previous - current > cfg.t_threshold;
        if tripped {
            entry.breaker_events.push(epoch);
        }
        entry.predicted = next;
        entry.breaker = breaker;
        Some(tripped)
    }
}

/// Outcome of one ledger update.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerUpdate {
    /// Epoch of the freshly issued tokens.
    pub epoch: Epoch,
    pub tokens: Vec<(RealId, TrustToken)>,
    /// Pseudonyms that did not resolve to a registered processor.
    pub unknown: Vec<Pid>,
    pub tripped: Vec<RealId>,
}

#[derive(Clone, Debug)]
pub struct TrustAuthority {
    group: GroupParams,
    keypair: PaillierKeypair,
    chi: EpochSecret,
    cipher: PidCipher,
    kappa1: u64,
    codec: FixedPointCodec,
    engine: EngineConfig,
    epoch: Epoch,
    ledger: TrustLedger,
    registry: BTreeMap<RealId, Identity>,
}

impl TrustAuthority {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        group: GroupParams,
        keypair: PaillierKeypair,
        chi: EpochSecret,
        cipher: PidCipher,
        kappa1: u64,
        codec: FixedPointCodec,
        engine: EngineConfig,
        epoch: Epoch,
    ) -> Self {
        Self {
            group,
            keypair,
            chi,
            cipher,
            kappa1,
            codec,
            engine,
            epoch,
            ledger: TrustLedger::default(),
            registry: BTreeMap::new(),
        }
    }

    pub(crate) fn register_processor(&mut self, identity: Identity) {
        self.ledger
            .entries
            .insert(identity.real_id.clone(), LedgerEntry::new(self.engine.t0));
        self.registry.insert(identity.real_id.clone(), identity);
    }

    pub(crate) fn register_customer(&mut self, identity: Identity) {
        self.registry.insert(identity.real_id.clone(), identity);
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    pub fn paillier(&self) -> &PaillierKeypair {
        &self.keypair
    }

    pub fn epoch_secret(&self) -> &EpochSecret {
        &self.chi
    }

    pub fn kappa1(&self) -> u64 {
        self.kappa1
    }

    pub fn codec(&self) -> &FixedPointCodec {
        &self.codec
    }

    pub fn engine(&self) -> &EngineConfig {
        &self.engine
    }

    pub fn set_engine(&mut self, engine: EngineConfig) {
        self.engine = engine;
    }

    pub fn epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn ledger(&self) -> &TrustLedger {
        &self.ledger
    }

    /// Maps a pseudonym to its owner, checking the embedded key against the registry.
    pub fn resolve(&self, pid: &Pid) -> Result<RealId, ProtocolError> {
        let (id, secret) = self.cipher.open(pid)?;
        let identity = self.registry.get(&id).ok_or(ProtocolError::UnknownIdentity)?;
        if identity
            .pseudonyms
            .iter()
            .any(|p| &p.pid == pid && p.keys.secret() == &secret)
        {
            Ok(id)
        } else {
            Err(ProtocolError::UnknownIdentity)
        }
    }

    /// Issues a token for an arbitrary trust value at the current epoch.
    pub fn issue_token<R: RngCore + ?Sized>(&self, trust: f64, rng: &mut R) -> Result<TrustToken, ProtocolError> {
        let t = BigUint::from(self.codec.encode(trust, Quantity::Trust)?);
        Ok(issue(
            &self.keypair.public,
            &self.chi,
            self.kappa1,
            &t,
            self.epoch,
            rng,
        )?)
    }

    /// Resolves the SP's `(PID, quality)` list, updates every processor seen this
    /// round, advances the epoch and re-issues a token to every processor.
    pub fn update_ledger<R: RngCore + ?Sized>(
        &mut self,
        qualities: &[(Pid, f64)],
        rng: &mut R,
    ) -> Result<LedgerUpdate, ProtocolError> {
        let mut per_id: BTreeMap<RealId, Vec<f64>> = BTreeMap::new();
        let mut unknown = Vec::new();
        for (pid, q) in qualities {
            match self.resolve(pid) {
                Ok(id) if self.ledger.entries.contains_key(&id) => per_id.entry(id).or_default().push(*q),
                _ => {
                    log::warn!("dropping trust report for unregistered pseudonym {pid}");
                    unknown.push(pid.clone());
                }
            }
        }
        let mut tripped = Vec::new();
        for (id, qs) in &per_id {
            if self.ledger.observe(id, qs, self.epoch, &self.engine) == Some(true) {
                log::info!("circuit breaker tripped for {id} in epoch {}", self.epoch);
                tripped.push(id.clone());
            }
        }
        self.epoch = self.epoch.next();
        let mut tokens = Vec::with_capacity(self.ledger.len());
        for (id, entry) in &self.ledger.entries {
            let t = BigUint::from(self.codec.encode(entry.predicted, Quantity::Trust)?);
            tokens.push((
                id.clone(),
                issue(&self.keypair.public, &self.chi, self.kappa1, &t, self.epoch, rng)?,
            ));
        }
        Ok(LedgerUpdate {
            epoch: self.epoch,
            tokens,
            unknown,
            tripped,
        })
    }
}
