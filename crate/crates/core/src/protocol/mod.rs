// SPDX-License-Identifier: Apache-2.0
//! The five protocol roles and the messages between them.
//!
//! Pairing elements are symmetric here: the generator, public keys, hashes and
//! signatures all live in the same group.

mod customer;
mod delivery;
mod identity;
mod messages;
mod processor;
mod rsu;
mod sp;
mod ta;
pub mod wire;

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use rand_core::RngCore;

pub use customer::Customer;
pub use delivery::{DeliveryLog, Item, Role};
pub use identity::{Identity, Pid, PidCipher, Pseudonym, RealId};
pub use messages::{
    AggregatedReport, CustomerReport, FeedbackReport, HandshakeProof, HandshakeResponse, ProcessorReport,
    TaskAnnouncement,
};
pub use processor::{Processor, ProcessorPolicy};
pub use rsu::{RoadsideUnit, RsuOutcome, VerifyMode};
pub use sp::{ServiceProvider, SpScore, TaskEvaluation};
pub use ta::{LedgerEntry, LedgerUpdate, TrustAuthority, TrustLedger};

use crate::codec::{CodecError, FixedPointCodec, Quantity};
use crate::paillier::{keygen, PaillierError};
use crate::pairing::{gen_params, GroupElement, GroupParams, PairingError, SigKeypair};
use crate::reputation::{EngineConfig, EngineError};
use crate::token::{issue, Epoch, EpochSecret, TokenError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Paillier(#[from] PaillierError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("symmetric encryption failed")]
    Cipher,
    #[error("pseudonym does not belong to a registered identity")]
    UnknownIdentity,
    #[error("handshake failed")]
    HandshakeFailure,
    #[error("no handshake state for task {0}")]
    NoActiveTask(TaskId),
    #[error("customer report signature is invalid")]
    InvalidCustomerReport,
    #[error("aggregate signature from RSU {0} is invalid")]
    InvalidAggregate(u32),
    #[error("aggregates describe different tasks")]
    AggregateMismatch,
    #[error("aggregated trust decrypts to zero")]
    DegenerateAggregate,
    #[error("every report was rejected")]
    EmptyAggregate,
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Task identifier `Tr_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TaskId(pub u64);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Why an RSU dropped a processor report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    Signature,
    Handshake,
    FakeTrust,
    Malformed,
    Duplicate,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Signature => "signature",
            RejectReason::Handshake => "handshake",
            RejectReason::FakeTrust => "fake-trust",
            RejectReason::Malformed => "malformed",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub pid: Pid,
    pub reason: RejectReason,
}

/// Pairing-based verification steps that are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CheckKind {
    CustomerSignature,
    ReportSignatureBatch,
    ReportSignatureIndividual,
    HandshakeBatch,
    HandshakeIndividual,
    AggregateSignature,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::CustomerSignature => "customer_signature",
            CheckKind::ReportSignatureBatch => "report_signature_batch",
            CheckKind::ReportSignatureIndividual => "report_signature_individual",
            CheckKind::HandshakeBatch => "handshake_batch",
            CheckKind::HandshakeIndividual => "handshake_individual",
            CheckKind::AggregateSignature => "aggregate_signature",
        }
    }

    pub fn is_batch(self) -> bool {
        matches!(self, CheckKind::ReportSignatureBatch | CheckKind::HandshakeBatch)
    }
}

/// One verification step: how many pairings it evaluated over how many items.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpRecord {
    pub check: CheckKind,
    pub pairings: usize,
    pub batch_size: usize,
}

/// `H(a + b)`, the handshake challenge point.
pub fn handshake_point(group: &GroupParams, a: &BigUint, b: &BigUint) -> GroupElement {
    group.hash_to_group(&(a + b).to_bytes_be())
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitConfig {
    pub kappa: u32,
    pub kappa1: u64,
    pub processors: usize,
    pub customers: usize,
    pub rsus: usize,
    /// Pseudonyms per registered entity.
    pub pseudonyms: u32,
    /// Prime size of each customer's per-task Paillier key.
    pub ephemeral_bits: u64,
    pub codec: FixedPointCodec,
    pub engine: EngineConfig,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kappa: 512,
            kappa1: 512,
            processors: 50,
            customers: 10,
            rsus: 1,
            pseudonyms: 5,
            ephemeral_bits: 64,
            codec: FixedPointCodec::default(),
            engine: EngineConfig::default(),
        }
    }
}

/// Everything `ta_init` hands out, one value per role.
#[derive(Debug)]
pub struct SystemBundle {
    pub ta: TrustAuthority,
    pub sp: ServiceProvider,
    pub rsus: Vec<RoadsideUnit>,
    pub customers: Vec<Customer>,
    pub processors: Vec<Processor>,
    pub log: DeliveryLog,
}

pub fn processor_id(index: usize) -> RealId {
    RealId(alloc::format!("P{index:04}").into_bytes())
}

pub fn customer_id(index: usize) -> RealId {
    RealId(alloc::format!("C{index:04}").into_bytes())
}

/// Generates all keys and distributes each role's parameter set.
pub fn ta_init<R: RngCore + ?Sized>(cfg: &InitConfig, rng: &mut R) -> Result<SystemBundle, ProtocolError> {
    if cfg.pseudonyms == 0 {
        return Err(ProtocolError::InvalidConfig("at least one pseudonym per entity"));
    }
    if cfg.rsus == 0 {
        return Err(ProtocolError::InvalidConfig("at least one RSU"));
    }
    cfg.engine.validate()?;
    let group = gen_params(cfg.kappa)?;
    let paillier = keygen(cfg.kappa1, rng)?;
    cfg.codec.check_capacity(cfg.processors as u64, paillier.public.n())?;
    let chi = EpochSecret::generate(paillier.public.n(), rng);
    let cipher = PidCipher::generate(&group, rng);
    let epoch = Epoch(1);
    let t0 = BigUint::from(cfg.codec.encode(cfg.engine.t0, Quantity::Trust)?);
    let modulus = paillier.public.modulus().clone();
    let mut log = DeliveryLog::default();
    let mut ta = TrustAuthority::new(
        group.clone(),
        paillier.clone(),
        chi.clone(),
        cipher.clone(),
        cfg.kappa1,
        cfg.codec,
        cfg.engine.clone(),
        epoch,
    );

    let entity_items = |log: &mut DeliveryLog, role: Role| {
        for item in [
            Item::GroupParams,
            Item::PaillierModulus,
            Item::PseudonymBundle,
            Item::TrustToken,
        ] {
            log.record(role, item);
        }
    };

    let mut processors = Vec::with_capacity(cfg.processors);
    for i in 0..cfg.processors {
        let identity = cipher.register(&group, processor_id(i), cfg.pseudonyms, rng)?;
        let token = issue(&paillier.public, &chi, cfg.kappa1, &t0, epoch, rng)?;
        ta.register_processor(identity.clone());
        entity_items(&mut log, Role::Processor(i as u32));
        processors.push(Processor::new(
            i as u32,
            identity,
            group.clone(),
            modulus.clone(),
            token,
        ));
    }

    let mut customers = Vec::with_capacity(cfg.customers);
    for i in 0..cfg.customers {
        let identity = cipher.register(&group, customer_id(i), cfg.pseudonyms, rng)?;
        let token = issue(&paillier.public, &chi, cfg.kappa1, &t0, epoch, rng)?;
        ta.register_customer(identity.clone());
        entity_items(&mut log, Role::Customer(i as u32));
        customers.push(Customer::new(
            i as u32,
            identity,
            group.clone(),
            modulus.clone(),
            token,
            cfg.ephemeral_bits,
        ));
    }

    let mut rsus = Vec::with_capacity(cfg.rsus);
    for i in 0..cfg.rsus {
        let keys = SigKeypair::generate(&group, rng);
        let role = Role::Rsu(i as u32);
        for item in [
            Item::GroupParams,
            Item::PaillierPublicKey,
            Item::EpochSecret,
            Item::RsuKeypair,
        ] {
            log.record(role, item);
        }
        rsus.push(RoadsideUnit::new(
            i as u32,
            group.clone(),
            paillier.public.clone(),
            chi.clone(),
            cfg.kappa1,
            keys,
            cfg.codec,
        ));
    }

    let rsu_keys = rsus.iter().map(|r| r.public_key().clone()).collect();
    for item in [
        Item::GroupParams,
        Item::PaillierPublicKey,
        Item::PaillierSecretKey,
        Item::RsuPublicKeys,
    ] {
        log.record(Role::ServiceProvider, item);
    }
    let sp = ServiceProvider::new(group, paillier, rsu_keys, cfg.codec, cfg.engine.clone());

    Ok(SystemBundle {
        ta,
        sp,
        rsus,
        customers,
        processors,
        log,
    })
}

/// Runs the three handshake messages between one customer and one processor.
///
/// The processor returns `Enc(α_j)` under the customer's per-task key; a
/// mismatch between the recovered and the chosen `α_j` is a handshake failure.
pub fn handshake<R: RngCore + ?Sized>(
    customer: &mut Customer,
    processor: &mut Processor,
    announcement: &TaskAnnouncement,
    rng: &mut R,
) -> Result<HandshakeProof, ProtocolError> {
    let response = processor.respond(announcement, rng)?;
    let recovered = customer.accept(announcement.task, &response)?;
    let (alpha_j, proof_jk) = processor
        .handshake_state(announcement.task)
        .ok_or(ProtocolError::NoActiveTask(announcement.task))?;
    if &recovered != alpha_j {
        return Err(ProtocolError::HandshakeFailure);
    }
    let proof_kj = customer
        .proof_for(announcement.task, &response.pid)
        .ok_or(ProtocolError::HandshakeFailure)?
        .clone();
    Ok(HandshakeProof {
        alpha_k: announcement.alpha_k.clone(),
        alpha_j: alpha_j.clone(),
        proof_kj,
        proof_jk: proof_jk.clone(),
    })
}
