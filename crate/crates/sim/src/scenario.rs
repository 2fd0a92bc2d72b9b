// SPDX-License-Identifier: Apache-2.0
//! The round loop: handshakes, reports with adversary substitutions, RSU
//! verification, SP scoring, trust evaluation and re-issuance.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use tpcs_core::bigint::random_below;
use tpcs_core::codec::Quantity;
use tpcs_core::paillier::Ciphertext;
use tpcs_core::pairing::{sign, GroupElement, GroupSignature, SigKeypair};
use tpcs_core::protocol::{
    handshake, ta_init, AggregatedReport, FeedbackReport, Pid, ProcessorPolicy, ProcessorReport, SystemBundle, TaskId,
};
use tpcs_core::token::TrustToken;

use crate::config::{Attack, ScenarioConfig};
use crate::probe::LinkRecord;
use crate::SimError;

/// One task: a customer, its reports and the truth-discovery trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskMetrics {
    pub customer: usize,
    pub task: u64,
    pub submitted: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// `None` when every report was rejected.
    pub rs0: Option<f64>,
    /// RS after each iteration, starting with the initial score.
    pub trajectory: Vec<f64>,
    pub iterations: u32,
    pub filter_skipped: bool,
    /// Decrypted `(Σ T̂ f̂, Σ T̂)` as decimal strings.
    pub decrypted: Option<(String, String)>,
    /// The same sums computed in the clear from the issued trust values.
    pub shadow: (String, String),
}

impl TaskMetrics {
    pub fn final_rs(&self) -> Option<f64> {
        self.trajectory.last().copied()
    }

    pub fn shadow_matches(&self) -> bool {
        match &self.decrypted {
            Some(d) => d == &self.shadow,
            None => self.accepted == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcessorTrust {
    pub index: usize,
    pub real_id: String,
    pub attack: Option<Attack>,
    /// Trust carried into the next round.
    pub trust: f64,
    /// Mean quality observed this round, if the processor was rated.
    pub observed: Option<f64>,
    pub breaker_flag: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RejectionRow {
    pub task: u64,
    pub pid: String,
    pub reason: &'static str,
    /// Submitting processor, or `None` for an outsider.
    pub processor: Option<usize>,
    pub attack: Option<Attack>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpRow {
    pub check_type: &'static str,
    pub pairing_count: usize,
    pub batch_size: usize,
    pub batched: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: u64,
    pub epoch: u64,
    pub tasks: Vec<TaskMetrics>,
    pub trust: Vec<ProcessorTrust>,
    pub rejections: Vec<RejectionRow>,
    pub ops: Vec<OpRow>,
    pub modexps: u64,
    pub breaker_events: Vec<String>,
    pub submitted: usize,
    pub accepted: usize,
}

impl RoundMetrics {
    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }

    pub fn conserved(&self) -> bool {
        self.accepted + self.rejected() == self.submitted
    }

    pub fn pairings(&self) -> usize {
        self.ops.iter().map(|o| o.pairing_count).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub rounds: Vec<RoundMetrics>,
    /// RSU-visible reports of customers 0 and 1 in the first round.
    pub link_transcripts: Option<(Vec<LinkRecord>, Vec<LinkRecord>)>,
    pub pseudonym_wraps: u32,
}

impl ScenarioRun {
    /// Final trust of every processor, `(index, attack, trust)`.
    pub fn final_trust(&self) -> Vec<(usize, Option<Attack>, f64)> {
        self.rounds
            .last()
            .map(|r| r.trust.iter().map(|t| (t.index, t.attack, t.trust)).collect())
            .unwrap_or_default()
    }
}

/// A report plus who really sent it.
struct Submission {
    report: ProcessorReport,
    processor: usize,
    outsider: bool,
}

struct Driver<'a> {
    cfg: &'a ScenarioConfig,
    bundle: SystemBundle,
    rng: ChaCha20Rng,
    /// Trust value encoded in each processor's current token.
    issued: Vec<f64>,
    previous_tokens: Vec<Option<TrustToken>>,
    owners: BTreeMap<Pid, usize>,
    noise: Option<Normal<f64>>,
}

/// Runs `cfg.rounds` rounds; output depends only on `cfg`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut bundle = ta_init(&cfg.init()?, &mut rng)?;
    let policy = ProcessorPolicy {
        perturb_tokens: cfg.perturb_tokens,
        rotate_pseudonyms: cfg.rotate_pseudonyms,
    };
    let mut owners = BTreeMap::new();
    for p in &mut bundle.processors {
        p.set_policy(policy);
        for ps in &p.identity().pseudonyms {
            owners.insert(ps.pid.clone(), p.index() as usize);
        }
    }
    for rsu in &mut bundle.rsus {
        rsu.set_mode(cfg.verify_mode());
    }
    let noise = if cfg.honest_sigma > 0.0 {
        Some(Normal::new(0.0, cfg.honest_sigma).map_err(|e| SimError::Config(e.to_string()))?)
    } else {
        None
    };
    let mut driver = Driver {
        cfg,
        issued: vec![cfg.t0; cfg.sum],
        previous_tokens: vec![None; cfg.sum],
        bundle,
        rng,
        owners,
        noise,
    };
    let mut rounds = Vec::with_capacity(cfg.rounds as usize);
    let mut link = None;
    for round in 1..=cfg.rounds {
        let (metrics, transcripts) = driver.round(round)?;
        if round == 1 {
            link = transcripts;
        }
        rounds.push(metrics);
    }
    let pseudonym_wraps = driver.bundle.processors.iter().map(|p| p.pseudonym_wraps()).sum();
    Ok(ScenarioRun {
        config: cfg.clone(),
        rounds,
        link_transcripts: link,
        pseudonym_wraps,
    })
}

impl Driver<'_> {
    fn honest_feedback(&mut self, customer: usize) -> f64 {
        let mu = self.cfg.customer_quality(customer);
        let eps = self.noise.map_or(0.0, |n| n.sample(&mut self.rng));
        (mu + eps).clamp(0.0, 1.0)
    }

    fn feedback(&mut self, processor: usize, customer: usize, round: u64) -> f64 {
        let honest = self.honest_feedback(customer);
        match self.cfg.attack_of(processor) {
            None => honest,
            Some(Attack::BadmouthInternal | Attack::BadmouthExternal | Attack::FakeTrustCollude) => {
                self.cfg.badmouth_feedback
            }
            Some(Attack::FakeTrustReplay) if round > 1 => self.cfg.badmouth_feedback,
            Some(Attack::FakeTrustReplay) => honest,
            Some(Attack::Onoff) if round == self.cfg.onoff_good_rounds + 1 => self.cfg.onoff_attack_feedback,
            Some(Attack::Onoff) => honest,
        }
    }

    /// Token a processor attaches, after any fake-trust substitution.
    fn token_for(&self, processor: usize, round: u64) -> TrustToken {
        let own = self.bundle.processors[processor].token().clone();
        match self.cfg.attack_of(processor) {
            Some(Attack::FakeTrustCollude) => {
                let partner = (processor + 1) % self.cfg.sum;
                let other = self.bundle.processors[partner].token();
                let m = self.bundle.processors[processor].modulus();
                TrustToken {
                    c_trust: m.add(&own.c_trust, &other.c_trust),
                    c_sig: m.add(&own.c_sig, &other.c_sig),
                    epoch: own.epoch,
                }
            }
            // The stale token is relabelled with the current epoch so that
            // only the cryptographic freshness check can catch it.
            Some(Attack::FakeTrustReplay) if round > 1 => match &self.previous_tokens[processor] {
                Some(old) => TrustToken {
                    epoch: own.epoch,
                    ..old.clone()
                },
                None => own,
            },
            _ => own,
        }
    }

    /// Self-signed report from an unregistered outsider that skipped the handshake.
    fn forged_report(&mut self, task: TaskId, ph_k: &Pid, pid_len: usize) -> Result<ProcessorReport, SimError> {
        let group = self.bundle.ta.group().clone();
        let keys = SigKeypair::generate(&group, &mut self.rng);
        let mut pid = vec![0u8; pid_len];
        self.rng.fill_bytes(&mut pid);
        let mut seed = [0u8; 32];
        self.rng.fill_bytes(&mut seed);
        let modulus = self.bundle.processors[0].modulus().clone();
        let n2 = modulus.n_squared().clone();
        let token = TrustToken {
            c_trust: Ciphertext(random_below(&mut self.rng, &n2)),
            c_sig: Ciphertext(random_below(&mut self.rng, &n2)),
            epoch: self.bundle.ta.epoch(),
        };
        let mut report = ProcessorReport {
            pid: Pid(pid),
            public: keys.public().clone(),
            feedback: FeedbackReport {
                ph_k: ph_k.clone(),
                task,
                feedback: self.cfg.badmouth_feedback,
            },
            token,
            proof_jk: group.hash_to_group(&seed),
            signature: GroupSignature(GroupElement::Identity),
        };
        let bytes = report.signing_bytes(&group, &modulus);
        report.signature = sign(&group, keys.secret(), &bytes).map_err(tpcs_core::protocol::ProtocolError::from)?;
        Ok(report)
    }

    fn shadow(&self, accepted: &[Pid], feedback: &BTreeMap<Pid, f64>) -> Result<(BigUint, BigUint), SimError> {
        let codec = self.cfg.codec()?;
        let mut weighted = BigUint::from(0u32);
        let mut total = BigUint::from(0u32);
        for pid in accepted {
            let j = self.owners[pid];
            let t = codec
                .encode(self.issued[j], Quantity::Trust)
                .map_err(|e| SimError::Config(e.to_string()))?;
            let f = codec
                .encode(feedback[pid], Quantity::Feedback)
                .map_err(|e| SimError::Config(e.to_string()))?;
            weighted += BigUint::from(t) * f;
            total += t;
        }
        Ok((weighted, total))
    }

    #[allow(clippy::type_complexity)]
    fn round(&mut self, round: u64) -> Result<(RoundMetrics, Option<(Vec<LinkRecord>, Vec<LinkRecord>)>), SimError> {
        let cfg = self.cfg;
        let epoch = self.bundle.ta.epoch();
        let mut metrics = RoundMetrics {
            round,
            epoch: epoch.0,
            tasks: Vec::with_capacity(cfg.m_h),
            trust: Vec::with_capacity(cfg.sum),
            rejections: Vec::new(),
            ops: Vec::new(),
            modexps: 0,
            breaker_events: Vec::new(),
            submitted: 0,
            accepted: 0,
        };
        let mut qualities: Vec<(Pid, f64)> = Vec::new();
        let mut transcripts: Vec<Vec<LinkRecord>> = Vec::new();
        let pid_len = self.bundle.processors[0].identity().pseudonyms[0].pid.0.len();

        for k in 0..cfg.m_h {
            let task = TaskId((round - 1) * cfg.m_h as u64 + k as u64 + 1);
            let announcement = self.bundle.customers[k].announce(task, &mut self.rng)?;
            let mut submissions = Vec::with_capacity(cfg.sum);
            for j in 0..cfg.sum {
                if cfg.attack_of(j) == Some(Attack::BadmouthExternal) {
                    let report = self.forged_report(task, &announcement.ph_k, pid_len)?;
                    submissions.push(Submission {
                        report,
                        processor: j,
                        outsider: true,
                    });
                    continue;
                }
                handshake(
                    &mut self.bundle.customers[k],
                    &mut self.bundle.processors[j],
                    &announcement,
                    &mut self.rng,
                )?;
                let f = self.feedback(j, k, round);
                let token = self.token_for(j, round);
                let report = self.bundle.processors[j].make_report_with_token(task, f, token, &mut self.rng)?;
                submissions.push(Submission {
                    report,
                    processor: j,
                    outsider: false,
                });
            }
            let customer_report = self.bundle.customers[k].make_report(task)?;
            submissions.shuffle(&mut self.rng);

            if round == 1 && k < 2 {
                let modulus = self.bundle.processors[0].modulus();
                transcripts.push(
                    submissions
                        .iter()
                        .filter(|s| !s.outsider)
                        .map(|s| LinkRecord {
                            pid: s.report.pid.0.clone(),
                            token: s.report.token.to_bytes(modulus),
                            processor: s.processor,
                        })
                        .collect(),
                );
            }

            let senders: BTreeMap<Pid, (Option<usize>, Option<Attack>)> = submissions
                .iter()
                .map(|s| {
                    let who = (!s.outsider).then_some(s.processor);
                    (s.report.pid.clone(), (who, cfg.attack_of(s.processor)))
                })
                .collect();
            let feedback: BTreeMap<Pid, f64> = submissions
                .iter()
                .map(|s| (s.report.pid.clone(), s.report.feedback.feedback))
                .collect();

            let mut aggregates: Vec<AggregatedReport> = Vec::new();
            let mut accepted: Vec<Pid> = Vec::new();
            let mut task_metrics = TaskMetrics {
                customer: k,
                task: task.0,
                submitted: 0,
                accepted: 0,
                rejected: 0,
                rs0: None,
                trajectory: Vec::new(),
                iterations: 0,
                filter_skipped: false,
                decrypted: None,
                shadow: (String::new(), String::new()),
            };
            for (s, rsu) in self.bundle.rsus.iter().enumerate() {
                let shard: Vec<ProcessorReport> = submissions
                    .iter()
                    .filter(|x| x.processor % cfg.rsus == s)
                    .map(|x| x.report.clone())
                    .collect();
                if shard.is_empty() {
                    continue;
                }
                let outcome = rsu.process(&customer_report, &shard, epoch)?;
                task_metrics.submitted += outcome.submitted;
                task_metrics.accepted += outcome.accepted.len();
                task_metrics.rejected += outcome.rejections.len();
                metrics.modexps += outcome.modexps;
                metrics.ops.extend(outcome.ops.iter().map(|o| OpRow {
                    check_type: o.check.as_str(),
                    pairing_count: o.pairings,
                    batch_size: o.batch_size,
                    batched: o.check.is_batch(),
                }));
                for rej in &outcome.rejections {
                    let (processor, attack) = senders.get(&rej.pid).copied().unwrap_or((None, None));
                    metrics.rejections.push(RejectionRow {
                        task: task.0,
                        pid: rej.pid.to_string(),
                        reason: rej.reason.as_str(),
                        processor,
                        attack,
                    });
                }
                accepted.extend(outcome.accepted.iter().cloned());
                if let Some(agg) = outcome.aggregate {
                    aggregates.push(agg);
                }
            }
            metrics.submitted += task_metrics.submitted;
            metrics.accepted += task_metrics.accepted;

            let (sw, st) = self.shadow(&accepted, &feedback)?;
            task_metrics.shadow = (sw.to_string(), st.to_string());
            if !aggregates.is_empty() {
                let score = self.bundle.sp.score(&aggregates)?;
                metrics.ops.extend(score.ops.iter().map(|o| OpRow {
                    check_type: o.check.as_str(),
                    pairing_count: o.pairings,
                    batch_size: o.batch_size,
                    batched: o.check.is_batch(),
                }));
                task_metrics.decrypted = Some((score.weighted.to_string(), score.total.to_string()));
                task_metrics.rs0 = Some(score.rs0);
                let evaluation = self.bundle.sp.evaluate(&score)?;
                task_metrics.trajectory = evaluation.discovery.trajectory.clone();
                task_metrics.iterations = evaluation.discovery.iterations;
                task_metrics.filter_skipped = evaluation.discovery.filter_skipped;
                qualities.extend(evaluation.qualities);
            } else {
                log::warn!("task {} of customer {k} has no accepted reports", task.0);
            }
            metrics.tasks.push(task_metrics);
        }

        let mut observed: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (pid, q) in &qualities {
            if let Some(&j) = self.owners.get(pid) {
                observed.entry(j).or_default().push(*q);
            }
        }
        let update = self.bundle.ta.update_ledger(&qualities, &mut self.rng)?;
        let tripped: BTreeSet<String> = update.tripped.iter().map(|id| id.to_string()).collect();
        let index_of: BTreeMap<String, usize> = self
            .bundle
            .processors
            .iter()
            .map(|p| (p.real_id().to_string(), p.index() as usize))
            .collect();
        for (id, token) in update.tokens {
            let j = index_of[&id.to_string()];
            let old = self.bundle.processors[j].token().clone();
            self.previous_tokens[j] = Some(old);
            self.bundle.processors[j].install_token(token);
            self.issued[j] = self.bundle.ta.ledger().get(&id).map_or(cfg.t0, |e| e.predicted);
        }
        for p in &self.bundle.processors {
            let j = p.index() as usize;
            let id = p.real_id().to_string();
            let obs = observed
                .get(&j)
                .map(|qs| (qs.iter().sum::<f64>() / qs.len() as f64).clamp(0.0, 1.0));
            metrics.trust.push(ProcessorTrust {
                index: j,
                breaker_flag: tripped.contains(&id),
                real_id: id,
                attack: cfg.attack_of(j),
                trust: self.issued[j],
                observed: obs,
            });
        }
        metrics.breaker_events = update.tripped.iter().map(|id| id.to_string()).collect();

        let link = if transcripts.len() == 2 {
            let b = transcripts.pop().expect("two transcripts");
            let a = transcripts.pop().expect("two transcripts");
            Some((a, b))
        } else {
            None
        };
        Ok((metrics, link))
    }
}
