// SPDX-License-Identifier: Apache-2.0
//! Attack scenarios and the crypto self-test, reported as named assertions.

use std::path::Path;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use tpcs_core::bigint::random_below;
use tpcs_core::paillier::keygen;
use tpcs_core::pairing::{batch_verify, gen_params, sign, verify, GroupSignature, SigKeypair, SignedMessage};
use tpcs_core::token::{batch_verify_fresh, issue, verify_fresh, Epoch, EpochSecret, TrustToken};

use crate::config::{Attack, ScenarioConfig};
use crate::emit::emit_results;
use crate::probe::link_attack_probe;
use crate::scenario::{run_scenario, ScenarioRun};
use crate::SimError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub scenario: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    fn new(scenario: &str, name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            scenario: scenario.to_string(),
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn trust_where(run: &ScenarioRun, pred: impl Fn(Option<Attack>) -> bool) -> Vec<f64> {
    run.final_trust()
        .into_iter()
        .filter(|(_, a, _)| pred(*a))
        .map(|(_, _, t)| t)
        .collect()
}

fn save(run: &ScenarioRun, out: Option<&Path>, name: &str) -> Result<(), SimError> {
    match out {
        Some(dir) => emit_results(run, &dir.join(name)),
        None => Ok(()),
    }
}

/// Badmouthing from inside and outside the system.
pub fn badmouth_scenario(base: &ScenarioConfig, out: Option<&Path>) -> Result<Vec<Assertion>, SimError> {
    let cfg = ScenarioConfig {
        attacks: vec![Attack::BadmouthInternal, Attack::BadmouthExternal],
        rho: if base.rho > 0.0 { base.rho } else { 0.2 },
        rounds: base.rounds.min(2),
        ..base.clone()
    };
    let run = run_scenario(&cfg)?;
    save(&run, out, "badmouth")?;
    let s = "badmouth";
    let rejections: Vec<_> = run.rounds.iter().flat_map(|r| &r.rejections).collect();
    let externals = rejections.iter().filter(|x| x.processor.is_none()).count();
    let expected_externals = (0..cfg.sum)
        .filter(|&j| cfg.attack_of(j) == Some(Attack::BadmouthExternal))
        .count()
        * cfg.m_h
        * cfg.rounds as usize;
    let external_reasons_ok = rejections
        .iter()
        .filter(|x| x.processor.is_none())
        .all(|x| x.reason == "handshake" || x.reason == "signature");
    let insiders_rejected = rejections.iter().filter(|x| x.processor.is_some()).count();
    let honest = mean(&trust_where(&run, |a| a.is_none()));
    let internal = mean(&trust_where(&run, |a| a == Some(Attack::BadmouthInternal)));
    let final_rs: Vec<f64> = run
        .rounds
        .iter()
        .flat_map(|r| r.tasks.iter().filter_map(|t| t.final_rs()))
        .collect();
    let rs = mean(&final_rs);
    Ok(vec![
        Assertion::new(
            s,
            "external reports rejected",
            externals == expected_externals && external_reasons_ok,
            format!("{externals}/{expected_externals} rejected by signature or handshake check"),
        ),
        Assertion::new(
            s,
            "internal reports accepted",
            insiders_rejected == 0,
            format!("{insiders_rejected} registered reports rejected"),
        ),
        Assertion::new(
            s,
            "internal badmouthers lose trust",
            internal < honest,
            format!("malicious {internal:.4} < honest {honest:.4}"),
        ),
        Assertion::new(
            s,
            "reputation stays near ground truth",
            (rs - cfg.honest_quality).abs() <= 0.05,
            format!("mean final RS {rs:.4} vs quality {}", cfg.honest_quality),
        ),
    ])
}

/// Colluding token products and replayed tokens.
pub fn fake_trust_scenario(base: &ScenarioConfig, out: Option<&Path>) -> Result<Vec<Assertion>, SimError> {
    let cfg = ScenarioConfig {
        attacks: vec![Attack::FakeTrustCollude, Attack::FakeTrustReplay],
        rho: if base.rho > 0.0 { base.rho } else { 0.2 },
        rounds: base.rounds.clamp(2, 3),
        ..base.clone()
    };
    let run = run_scenario(&cfg)?;
    save(&run, out, "fake-trust")?;
    let s = "fake-trust";
    let mut collude = (0usize, 0usize);
    let mut replay = (0usize, 0usize);
    let mut honest_rejected = 0usize;
    let mut first_round_replays_rejected = 0usize;
    for r in &run.rounds {
        for x in &r.rejections {
            match x.attack {
                Some(Attack::FakeTrustCollude) => {
                    collude.0 += usize::from(x.reason == "fake-trust");
                }
                Some(Attack::FakeTrustReplay) if r.round > 1 => {
                    replay.0 += usize::from(x.reason == "fake-trust");
                }
                Some(Attack::FakeTrustReplay) => first_round_replays_rejected += 1,
                _ => honest_rejected += 1,
            }
        }
    }
    for j in 0..cfg.sum {
        match cfg.attack_of(j) {
            Some(Attack::FakeTrustCollude) => collude.1 += cfg.m_h * cfg.rounds as usize,
            Some(Attack::FakeTrustReplay) => replay.1 += cfg.m_h * (cfg.rounds as usize - 1),
            _ => {}
        }
    }
    Ok(vec![
        Assertion::new(
            s,
            "collusion products rejected",
            collude.0 == collude.1 && collude.1 > 0,
            format!("{}/{} rejected as fake-trust", collude.0, collude.1),
        ),
        Assertion::new(
            s,
            "replayed tokens rejected",
            replay.0 == replay.1 && replay.1 > 0,
            format!("{}/{} rejected as fake-trust", replay.0, replay.1),
        ),
        Assertion::new(
            s,
            "fresh tokens accepted",
            honest_rejected == 0 && first_round_replays_rejected == 0,
            format!("{honest_rejected} honest and {first_round_replays_rejected} first-round rejections"),
        ),
    ])
}

/// Config for the on-off runs: one attacker among ten processors, one task per round.
pub fn onoff_config(base: &ScenarioConfig, forgetting: bool) -> ScenarioConfig {
    ScenarioConfig {
        attacks: vec![Attack::Onoff],
        sum: ONOFF_PROCESSORS,
        rho: 1.0 / ONOFF_PROCESSORS as f64,
        m_h: 1,
        rounds: base.onoff_good_rounds + 5,
        forgetting,
        ..base.clone()
    }
}

pub const ONOFF_PROCESSORS: usize = 10;

/// Breaker events must match the drop condition exactly, processor by processor.
fn breaker_consistent(run: &ScenarioRun) -> (bool, usize) {
    let cfg = &run.config;
    let mut last: Vec<f64> = vec![cfg.t0; cfg.sum];
    let mut events = 0;
    for r in &run.rounds {
        for p in &r.trust {
            let expected = match p.observed {
                Some(cur) => last[p.index] - cur > cfg.t_threshold,
                None => false,
            };
            if expected != p.breaker_flag {
                return (false, events);
            }
            events += usize::from(p.breaker_flag);
            if let Some(cur) = p.observed {
                last[p.index] = cur;
            }
        }
    }
    (true, events)
}

/// On-off attack with and without the forgetting factor.
pub fn onoff_scenario(base: &ScenarioConfig, out: Option<&Path>) -> Result<Vec<Assertion>, SimError> {
    let with = run_scenario(&onoff_config(base, true))?;
    let without = run_scenario(&onoff_config(base, false))?;
    save(&with, out, "onoff")?;
    save(&without, out, "onoff-no-forgetting")?;
    let s = "onoff";
    let attack_round = base.onoff_good_rounds + 1;
    let attackers: Vec<usize> = (0..with.config.sum)
        .filter(|&j| with.config.attack_of(j) == Some(Attack::Onoff))
        .collect();
    let fired_at: Vec<Vec<u64>> = attackers
        .iter()
        .map(|&j| {
            with.rounds
                .iter()
                .filter(|r| r.trust[j].breaker_flag)
                .map(|r| r.round)
                .collect()
        })
        .collect();
    let first_at_attack = fired_at.iter().all(|f| f.first() == Some(&attack_round));
    let (consistent, events) = breaker_consistent(&with);
    let last = with.rounds.len() - 1;
    let t_with = mean(
        &attackers
            .iter()
            .map(|&j| with.rounds[last].trust[j].trust)
            .collect::<Vec<_>>(),
    );
    let t_without = mean(
        &attackers
            .iter()
            .map(|&j| without.rounds[last].trust[j].trust)
            .collect::<Vec<_>>(),
    );
    Ok(vec![
        Assertion::new(
            s,
            "breaker first fires at the attack round",
            first_at_attack && !attackers.is_empty(),
            format!("attack round {attack_round}, fired at {fired_at:?}"),
        ),
        Assertion::new(
            s,
            "breaker fires iff trust drop exceeds threshold",
            consistent,
            format!("{events} events checked against the drop condition"),
        ),
        Assertion::new(
            s,
            "forgetting factor slows recovery",
            t_with < t_without,
            format!(
                "trust after round {}: {t_with:.4} with vs {t_without:.4} without",
                last + 1
            ),
        ),
    ])
}

/// Link configuration: two customers, one round, no adversaries.
pub fn link_config(base: &ScenarioConfig, seed: u64, perturb: bool, rotate: bool) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        rho: 0.0,
        m_h: 2,
        rounds: 1,
        perturb_tokens: perturb,
        rotate_pseudonyms: rotate,
        ..base.clone()
    }
}

/// Mean link-probe accuracy over `seeds` scenarios.
pub fn link_accuracy(base: &ScenarioConfig, seeds: u64, perturb: bool, rotate: bool) -> Result<Vec<f64>, SimError> {
    (0..seeds)
        .map(|i| {
            let seed = base.seed.wrapping_add(i);
            let run = run_scenario(&link_config(base, seed, perturb, rotate))?;
            let (a, b) = run
                .link_transcripts
                .as_ref()
                .ok_or_else(|| SimError::Config("no transcripts".into()))?;
            Ok(link_attack_probe(a, b, seed ^ 0x5eed))
        })
        .collect()
}

pub fn link_scenario(base: &ScenarioConfig, seeds: u64) -> Result<Vec<Assertion>, SimError> {
    let s = "link";
    let bound = 1.0 / base.sum as f64 + 0.05;
    let full = mean(&link_accuracy(base, seeds, true, true)?);
    let no_perturb = link_accuracy(base, seeds, false, true)?;
    let no_rotate = link_accuracy(base, seeds, true, false)?;
    Ok(vec![
        Assertion::new(
            s,
            "full pipeline at chance",
            full <= bound,
            format!("accuracy {full:.4} <= {bound:.4} over {seeds} seeds"),
        ),
        Assertion::new(
            s,
            "unperturbed tokens fully linkable",
            no_perturb.iter().all(|&a| a == 1.0),
            format!("accuracy {:.4}", mean(&no_perturb)),
        ),
        Assertion::new(
            s,
            "fixed pseudonyms fully linkable",
            no_rotate.iter().all(|&a| a == 1.0),
            format!("accuracy {:.4}", mean(&no_rotate)),
        ),
    ])
}

/// All four attack scenarios. Results go under `out` when given.
pub fn attack_suite(base: &ScenarioConfig, out: Option<&Path>) -> Result<Vec<Assertion>, SimError> {
    base.validate()?;
    let mut all = Vec::new();
    all.extend(badmouth_scenario(base, out)?);
    all.extend(fake_trust_scenario(base, out)?);
    all.extend(onoff_scenario(base, out)?);
    all.extend(link_scenario(base, 20)?);
    if let Some(dir) = out {
        let path = dir.join("suite.json");
        let text = serde_json::to_string_pretty(&all)? + "\n";
        std::fs::write(&path, text).map_err(|e| SimError::Io(path.display().to_string(), e))?;
    }
    Ok(all)
}

/// Seeded crypto checks at small key sizes.
pub fn selftest(seed: u64) -> Result<Vec<Assertion>, SimError> {
    let s = "selftest";
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let kp = keygen(64, &mut rng).map_err(tpcs_core::protocol::ProtocolError::from)?;
    let (pk, sk) = (&kp.public, &kp.secret);
    let n = pk.n().clone();
    let mut ok = (true, true, true);
    for _ in 0..50 {
        let a = random_below(&mut rng, &n);
        let b = random_below(&mut rng, &n);
        let k = random_below(&mut rng, &n);
        let ca = pk.encrypt_random(&a, &mut rng).expect("plaintext below n");
        let cb = pk.encrypt_random(&b, &mut rng).expect("plaintext below n");
        ok.0 &= sk.decrypt(pk, &ca).ok() == Some(a.clone());
        ok.1 &= sk.decrypt(pk, &pk.add(&ca, &cb)).ok() == Some((&a + &b) % &n);
        let scaled = pk.scalar_mul(&ca, &k).expect("valid ciphertext");
        ok.2 &= sk.decrypt(pk, &scaled).ok() == Some((&a * &k) % &n);
    }
    out.push(Assertion::new(s, "paillier roundtrip", ok.0, "50 cases"));
    out.push(Assertion::new(s, "paillier additive homomorphism", ok.1, "50 cases"));
    out.push(Assertion::new(s, "paillier scalar homomorphism", ok.2, "50 cases"));

    let group = gen_params(48).map_err(tpcs_core::protocol::ProtocolError::from)?;
    let base = group.pairing(group.generator(), group.generator());
    let mut bilinear = true;
    for _ in 0..20 {
        let a = group.random_scalar(&mut rng);
        let b = group.random_scalar(&mut rng);
        let lhs = group.pairing(&group.mul_generator(&a), &group.mul_generator(&b));
        bilinear &= lhs == group.gt_pow(&base, &((&a * &b) % group.order()));
    }
    bilinear &= !base.is_identity();
    out.push(Assertion::new(s, "pairing bilinearity", bilinear, "20 exponent pairs"));

    let mut agree = true;
    for size in 1..=16usize {
        let keys: Vec<_> = (0..size).map(|_| SigKeypair::generate(&group, &mut rng)).collect();
        let msgs: Vec<Vec<u8>> = (0..size).map(|i| format!("m{size}-{i}").into_bytes()).collect();
        let mut sigs: Vec<GroupSignature> = keys
            .iter()
            .zip(&msgs)
            .map(|(k, m)| sign(&group, k.secret(), m).expect("valid key"))
            .collect();
        if rng.gen_bool(0.5) {
            let victim = rng.gen_range(0..size);
            sigs[victim] = GroupSignature(group.add(&sigs[victim].0, group.generator()));
        }
        let entries: Vec<_> = (0..size)
            .map(|i| SignedMessage {
                public: keys[i].public(),
                message: &msgs[i],
                signature: &sigs[i],
            })
            .collect();
        let batch = batch_verify(&group, &entries).expect("nonempty");
        let individual = (0..size).all(|i| verify(&group, keys[i].public(), &msgs[i], &sigs[i]));
        agree &= batch.valid == individual && batch.pairings == size + 1;
    }
    out.push(Assertion::new(
        s,
        "signature batch agrees with individual",
        agree,
        "sizes 1..=16",
    ));

    let chi = EpochSecret::generate(&n, &mut rng);
    let mut fresh = (true, true, true);
    for _ in 0..50 {
        let t1 = BigUint::from(rng.gen_range(0u64..=10_000));
        let t2 = BigUint::from(rng.gen_range(0u64..=10_000));
        let epoch = Epoch(rng.gen_range(2u64..1000));
        let a = issue(pk, &chi, 64, &t1, epoch, &mut rng).map_err(tpcs_core::protocol::ProtocolError::from)?;
        let b = issue(pk, &chi, 64, &t2, epoch, &mut rng).map_err(tpcs_core::protocol::ProtocolError::from)?;
        let old =
            issue(pk, &chi, 64, &t1, Epoch(epoch.0 - 1), &mut rng).map_err(tpcs_core::protocol::ProtocolError::from)?;
        let m = pk.modulus();
        let product = TrustToken {
            c_trust: m.add(&a.c_trust, &b.c_trust),
            c_sig: m.add(&a.c_sig, &b.c_sig),
            epoch,
        };
        let replay = TrustToken { epoch, ..old };
        fresh.0 &= verify_fresh(pk, &chi, 64, &a.perturb(m, &mut rng), epoch)
            && batch_verify_fresh(pk, &chi, 64, &[&a, &b], epoch).unwrap_or(false);
        fresh.1 &= !verify_fresh(pk, &chi, 64, &product, epoch);
        fresh.2 &= !verify_fresh(pk, &chi, 64, &replay, epoch);
    }
    out.push(Assertion::new(s, "fresh tokens accepted", fresh.0, "50 trials"));
    out.push(Assertion::new(s, "token products rejected", fresh.1, "50 trials"));
    out.push(Assertion::new(s, "replayed tokens rejected", fresh.2, "50 trials"));
    Ok(out)
}
