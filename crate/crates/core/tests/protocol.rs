// SPDX-License-Identifier: Apache-2.0
use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use tpcs_core::codec::{FixedPointCodec, Quantity};
use tpcs_core::pairing::{sign, GroupSignature, SigKeypair};
use tpcs_core::protocol::{
    handshake, ta_init, AggregatedReport, CheckKind, CustomerReport, InitConfig, Item, Pid, ProcessorReport,
    ProtocolError, RejectReason, Role, SpScore, SystemBundle, TaskId, VerifyMode,
};
use tpcs_core::token::{Epoch, TrustToken};

fn small(processors: usize, customers: usize) -> InitConfig {
    InitConfig {
        kappa: 48,
        kappa1: 64,
        processors,
        customers,
        rsus: 1,
        pseudonyms: 3,
        ephemeral_bits: 32,
        ..Default::default()
    }
}

fn init(processors: usize, customers: usize, seed: u64) -> (SystemBundle, ChaCha20Rng) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let bundle = ta_init(&small(processors, customers), &mut rng).unwrap();
    (bundle, rng)
}

/// Announces a task for `customer`, handshakes with `members`, and collects reports.
fn run_task(
    b: &mut SystemBundle,
    customer: usize,
    task: u64,
    members: &[usize],
    feedback: impl Fn(usize) -> f64,
    rng: &mut ChaCha20Rng,
) -> (CustomerReport, Vec<ProcessorReport>) {
    let task = TaskId(task);
    let ann = b.customers[customer].announce(task, rng).unwrap();
    for &j in members {
        handshake(&mut b.customers[customer], &mut b.processors[j], &ann, rng).unwrap();
    }
    let reports = members
        .iter()
        .map(|&j| b.processors[j].make_report(task, feedback(j), rng).unwrap())
        .collect();
    (b.customers[customer].make_report(task).unwrap(), reports)
}

fn decrypt(b: &SystemBundle, agg: &AggregatedReport) -> (BigUint, BigUint) {
    let kp = b.ta.paillier();
    (
        kp.secret.decrypt(&kp.public, &agg.c1).unwrap(),
        kp.secret.decrypt(&kp.public, &agg.c2).unwrap(),
    )
}

#[test]
fn init_distributes_pseudonyms_and_initial_trust() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let cfg = InitConfig {
        pseudonyms: 5,
        ..small(50, 2)
    };
    let b = ta_init(&cfg, &mut rng).unwrap();
    let mut pids = BTreeSet::new();
    for p in &b.processors {
        for ps in &p.identity().pseudonyms {
            assert_eq!(&b.ta.resolve(&ps.pid).unwrap(), p.real_id());
            pids.insert(ps.pid.clone());
        }
    }
    assert_eq!(pids.len(), 250);
    let kp = b.ta.paillier();
    for p in &b.processors {
        assert_eq!(
            kp.secret.decrypt(&kp.public, &p.token().c_trust).unwrap(),
            BigUint::from(100u32)
        );
        assert_eq!(p.token().epoch, Epoch(1));
    }
    let sp_items: Vec<Item> = b.log.received(Role::ServiceProvider).collect();
    assert!(!sp_items.contains(&Item::EpochSecret));
    assert!(!sp_items.contains(&Item::PseudonymKey));
    assert!(sp_items.contains(&Item::PaillierSecretKey));
    assert!(!b.log.received(Role::Rsu(0)).any(|i| i == Item::PaillierSecretKey));
    assert!(b.log.violations().is_empty());
}

#[test]
fn init_rejects_overflowing_codec() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let cfg = InitConfig {
        kappa1: 16,
        codec: FixedPointCodec::new(1_000_000, 10_000).unwrap(),
        ..small(50, 1)
    };
    assert!(matches!(ta_init(&cfg, &mut rng), Err(ProtocolError::Codec(_))));
}

#[test]
fn honest_task_aggregates_exactly() {
    let (mut b, mut rng) = init(10, 1, 3);
    let fb = |j: usize| 0.7 + 0.01 * j as f64;
    let members: Vec<usize> = (0..10).collect();
    let (cr, reports) = run_task(&mut b, 0, 1, &members, fb, &mut rng);
    let out = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert!(out.rejections.is_empty());
    assert_eq!(out.accepted.len(), 10);
    let agg = out.into_aggregate().unwrap();
    let (c1, c2) = decrypt(&b, &agg);
    let codec = FixedPointCodec::default();
    let shadow: u64 = members
        .iter()
        .map(|&j| 100 * codec.encode(fb(j), Quantity::Feedback).unwrap())
        .sum();
    assert_eq!(c2, BigUint::from(1000u32));
    assert_eq!(c1, BigUint::from(shadow));
    let score = b.sp.score(&[agg]).unwrap();
    assert!((score.rs0 - shadow as f64 / 1000.0 / 1000.0).abs() < 1e-12);
}

#[test]
fn handshake_proofs_are_cross_verifiable_and_distinct() {
    let (mut b, mut rng) = init(2, 1, 4);
    let ann = b.customers[0].announce(TaskId(9), &mut rng).unwrap();
    let (c, ps) = (&mut b.customers[0], &mut b.processors);
    let h0 = handshake(c, &mut ps[0], &ann, &mut rng).unwrap();
    let h1 = handshake(c, &mut ps[1], &ann, &mut rng).unwrap();
    assert_ne!(h0.alpha_j, h1.alpha_j);
    assert_ne!(h0.proof_jk, h1.proof_jk);
    assert_ne!(h0.proof_kj, h1.proof_kj);
    let g = b.ta.group();
    let y_j = b.processors[0].identity().pseudonyms[0].keys.public().clone();
    assert_eq!(
        g.pairing(b.customers[0].public_key(), &h0.proof_jk),
        g.pairing(&y_j, &h0.proof_kj)
    );
}

#[test]
fn intercepted_announcement_breaks_handshake() {
    let (mut b, mut rng) = init(1, 2, 5);
    let mut ann = b.customers[0].announce(TaskId(1), &mut rng).unwrap();
    ann.ephemeral = b.customers[1].announce(TaskId(2), &mut rng).unwrap().ephemeral;
    let res = handshake(&mut b.customers[0], &mut b.processors[0], &ann, &mut rng);
    assert_eq!(res, Err(ProtocolError::HandshakeFailure));
}

#[test]
fn processor_without_handshake_cannot_report() {
    let (mut b, mut rng) = init(1, 1, 6);
    assert_eq!(
        b.processors[0].make_report(TaskId(3), 0.5, &mut rng),
        Err(ProtocolError::NoActiveTask(TaskId(3)))
    );
}

#[test]
fn external_forgery_fails_handshake_check() {
    let (mut b, mut rng) = init(5, 1, 7);
    let (cr, mut reports) = run_task(&mut b, 0, 1, &[0, 1, 2, 3, 4], |_| 0.8, &mut rng);
    let group = b.ta.group().clone();
    let modulus = b.ta.paillier().public.modulus().clone();
    let outsider = SigKeypair::generate(&group, &mut rng);
    let mut forged = reports[0].clone();
    forged.pid = Pid(vec![0xAA; 20]);
    forged.public = outsider.public().clone();
    forged.feedback.feedback = 0.05;
    forged.proof_jk = group.hash_to_group(b"no handshake");
    forged.signature = sign(&group, outsider.secret(), &forged.signing_bytes(&group, &modulus)).unwrap();
    reports.push(forged.clone());
    let out = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert_eq!(out.rejections.len(), 1);
    assert_eq!(out.rejections[0].pid, forged.pid);
    assert_eq!(out.rejections[0].reason, RejectReason::Handshake);
    assert_eq!(out.accepted.len(), 5);
}

#[test]
fn bad_signature_is_isolated() {
    let (mut b, mut rng) = init(6, 1, 8);
    let (cr, mut reports) = run_task(&mut b, 0, 1, &[0, 1, 2, 3, 4, 5], |_| 0.8, &mut rng);
    reports[2].signature = GroupSignature(b.ta.group().generator().clone());
    let out = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert_eq!(out.rejections.len(), 1);
    assert_eq!(out.rejections[0].reason, RejectReason::Signature);
    let checks: Vec<_> = out.ops.iter().map(|o| (o.check, o.pairings, o.batch_size)).collect();
    assert_eq!(
        checks,
        vec![
            (CheckKind::CustomerSignature, 2, 1),
            (CheckKind::ReportSignatureBatch, 7, 6),
            (CheckKind::ReportSignatureIndividual, 12, 6),
            (CheckKind::HandshakeBatch, 6, 5),
        ]
    );
}

#[test]
fn replay_and_collusion_are_fake_trust() {
    let (mut b, mut rng) = init(6, 1, 9);
    let old = b.processors[0].token().clone();
    // next epoch: fresh tokens for everyone
    let upd = b.ta.update_ledger(&[], &mut rng).unwrap();
    for (p, (_, t)) in b.processors.iter_mut().zip(upd.tokens) {
        p.install_token(t);
    }
    let task = TaskId(1);
    let ann = b.customers[0].announce(task, &mut rng).unwrap();
    for j in 0..6 {
        handshake(&mut b.customers[0], &mut b.processors[j], &ann, &mut rng).unwrap();
    }
    let modulus = b.ta.paillier().public.modulus().clone();
    let mine = b.processors[1].token().clone();
    let partner = b.processors[2].token().clone();
    let collude = TrustToken {
        c_trust: modulus.add(&mine.c_trust, &partner.c_trust),
        c_sig: modulus.add(&mine.c_sig, &partner.c_sig),
        epoch: mine.epoch,
    };
    let mut reports = vec![
        b.processors[0]
            .make_report_with_token(task, 0.8, old, &mut rng)
            .unwrap(),
        b.processors[1]
            .make_report_with_token(task, 0.8, collude, &mut rng)
            .unwrap(),
    ];
    for j in 2..6 {
        reports.push(b.processors[j].make_report(task, 0.8, &mut rng).unwrap());
    }
    let cr = b.customers[0].make_report(task).unwrap();
    let out = b.rsus[0].process(&cr, &reports, Epoch(2)).unwrap();
    let reasons: Vec<_> = out.rejections.iter().map(|r| (r.pid.clone(), r.reason)).collect();
    assert_eq!(
        reasons,
        vec![
            (reports[0].pid.clone(), RejectReason::FakeTrust),
            (reports[1].pid.clone(), RejectReason::FakeTrust),
        ]
    );
    assert_eq!(out.accepted.len(), 4);
}

#[test]
fn reports_from_two_tasks_share_no_fields() {
    let (mut b, mut rng) = init(1, 2, 10);
    let (_, r1) = run_task(&mut b, 0, 1, &[0], |_| 0.8, &mut rng);
    let (_, r2) = run_task(&mut b, 1, 2, &[0], |_| 0.8, &mut rng);
    let modulus = b.ta.paillier().public.modulus().clone();
    assert_ne!(r1[0].pid, r2[0].pid);
    assert_ne!(r1[0].public, r2[0].public);
    assert_ne!(r1[0].token.to_bytes(&modulus), r2[0].token.to_bytes(&modulus));
    assert_ne!(r1[0].signature, r2[0].signature);
    let kp = b.ta.paillier();
    assert_eq!(
        kp.secret.decrypt(&kp.public, &r1[0].token.c_trust).unwrap(),
        kp.secret.decrypt(&kp.public, &r2[0].token.c_trust).unwrap()
    );
}

#[test]
fn acceptance_is_permutation_invariant() {
    let (mut b, mut rng) = init(6, 1, 11);
    let (cr, mut reports) = run_task(&mut b, 0, 1, &[0, 1, 2, 3, 4, 5], |j| j as f64 / 6.0, &mut rng);
    reports[4].feedback.feedback = 0.1; // invalidates its signature
    let first = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    reports.reverse();
    reports.swap(0, 3);
    let second = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert_eq!(first.accepted, second.accepted);
    let (a, c) = (first.into_aggregate().unwrap(), second.into_aggregate().unwrap());
    assert_eq!(decrypt(&b, &a), decrypt(&b, &c));
}

#[test]
fn duplicate_and_malformed_reports() {
    let (mut b, mut rng) = init(3, 1, 12);
    let (cr, mut reports) = run_task(&mut b, 0, 1, &[0, 1, 2], |_| 0.5, &mut rng);
    reports.push(reports[0].clone());
    reports[1].feedback.task = TaskId(99);
    let out = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    let reasons: Vec<_> = out.rejections.iter().map(|r| r.reason).collect();
    assert_eq!(reasons, vec![RejectReason::Malformed, RejectReason::Duplicate]);
    assert_eq!(out.accepted.len() + out.rejections.len(), out.submitted);
}

#[test]
fn all_rejected_is_empty_aggregate() {
    let (mut b, mut rng) = init(2, 1, 13);
    let (cr, mut reports) = run_task(&mut b, 0, 1, &[0, 1], |_| 0.5, &mut rng);
    for r in &mut reports {
        r.signature = GroupSignature(b.ta.group().generator().clone());
    }
    let out = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert_eq!(out.into_aggregate(), Err(ProtocolError::EmptyAggregate));
}

#[test]
fn tampered_customer_report_is_refused() {
    let (mut b, mut rng) = init(2, 1, 14);
    let (mut cr, reports) = run_task(&mut b, 0, 1, &[0, 1], |_| 0.5, &mut rng);
    cr.proofs.pop();
    assert_eq!(
        b.rsus[0].process(&cr, &reports, Epoch(1)),
        Err(ProtocolError::InvalidCustomerReport)
    );
}

#[test]
fn pairing_counts_batch_versus_individual() {
    let (mut b, mut rng) = init(10, 1, 15);
    let members: Vec<usize> = (0..10).collect();
    let (cr, reports) = run_task(&mut b, 0, 1, &members, |_| 0.5, &mut rng);
    let batch = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    let sig = |o: &tpcs_core::protocol::RsuOutcome, k| o.ops.iter().find(|r| r.check == k).map(|r| r.pairings);
    assert_eq!(sig(&batch, CheckKind::ReportSignatureBatch), Some(11));
    b.rsus[0].set_mode(VerifyMode::Individual);
    let single = b.rsus[0].process(&cr, &reports, Epoch(1)).unwrap();
    assert_eq!(sig(&single, CheckKind::ReportSignatureIndividual), Some(20));
    assert_eq!(sig(&single, CheckKind::ReportSignatureBatch), None);
    assert_eq!(batch.accepted, single.accepted);
}

#[test]
fn sp_score_weighted_ratio() {
    let (mut b, mut rng) = init(2, 1, 16);
    for (j, t) in [(0, 0.9), (1, 0.1)] {
        let tok = b.ta.issue_token(t, &mut rng).unwrap();
        b.processors[j].install_token(tok);
    }
    let (cr, reports) = run_task(&mut b, 0, 1, &[0, 1], |j| if j == 0 { 1.0 } else { 0.0 }, &mut rng);
    let agg = b.rsus[0]
        .process(&cr, &reports, Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    let score = b.sp.score(std::slice::from_ref(&agg)).unwrap();
    assert_eq!(score.rs0, 0.9);

    let mut forged = agg;
    forged.entries.pop();
    assert_eq!(b.sp.score(&[forged]), Err(ProtocolError::InvalidAggregate(0)));
}

#[test]
fn sp_equal_trust_is_plain_mean() {
    let (mut b, mut rng) = init(2, 1, 17);
    let (cr, reports) = run_task(&mut b, 0, 1, &[0, 1], |j| if j == 0 { 0.8 } else { 0.6 }, &mut rng);
    let agg = b.rsus[0]
        .process(&cr, &reports, Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    assert!((b.sp.score(&[agg]).unwrap().rs0 - 0.7).abs() < 1e-12);
}

#[test]
fn query_customers_orders_and_breaks_ties() {
    let (mut b, _) = init(1, 1, 18);
    assert!(b.sp.query_customers().is_empty());
    let score = |ph: u8, rs: f64| SpScore {
        ph_k: Pid(vec![ph]),
        task: TaskId(ph as u64),
        weighted: BigUint::from(1u32),
        total: BigUint::from(1u32),
        rs0: rs,
        feedback: vec![(Pid(vec![100 + ph]), rs)],
        ops: vec![],
    };
    b.sp.evaluate(&score(2, 0.61)).unwrap();
    b.sp.evaluate(&score(3, 0.787)).unwrap();
    b.sp.evaluate(&score(1, 0.61)).unwrap();
    let ranked: Vec<u8> = b.sp.query_customers().iter().map(|(p, _)| p.0[0]).collect();
    assert_eq!(ranked, vec![3, 1, 2]);
}

#[test]
fn multi_rsu_shards_combine_at_sp() {
    let mut rng = ChaCha20Rng::seed_from_u64(19);
    let cfg = InitConfig { rsus: 2, ..small(6, 1) };
    let mut b = ta_init(&cfg, &mut rng).unwrap();
    let members: Vec<usize> = (0..6).collect();
    let fb = |j: usize| 0.5 + 0.05 * j as f64;
    let (cr, reports) = run_task(&mut b, 0, 1, &members, fb, &mut rng);
    let (even, odd): (Vec<_>, Vec<_>) = reports.iter().cloned().enumerate().partition(|(i, _)| i % 2 == 0);
    let shard = |v: Vec<(usize, ProcessorReport)>| v.into_iter().map(|(_, r)| r).collect::<Vec<_>>();
    let a0 = b.rsus[0]
        .process(&cr, &shard(even), Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    let a1 = b.rsus[1]
        .process(&cr, &shard(odd), Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    let split = b.sp.score(&[a0, a1]).unwrap();
    let whole = b.rsus[0]
        .process(&cr, &reports, Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    let joint = b.sp.score(&[whole]).unwrap();
    assert_eq!((split.weighted, split.total), (joint.weighted, joint.total));
}

#[test]
fn ledger_merges_pseudonyms_and_drops_unknown() {
    let (mut b, mut rng) = init(2, 1, 20);
    let p0 = &b.processors[0].identity().pseudonyms;
    let quals = vec![
        (p0[0].pid.clone(), 0.9),
        (p0[1].pid.clone(), 0.7),
        (b.processors[1].identity().pseudonyms[2].pid.clone(), 0.5),
        (Pid(vec![7; 40]), 0.3),
        (b.customers[0].ph_k().clone(), 0.3),
    ];
    let upd = b.ta.update_ledger(&quals, &mut rng).unwrap();
    assert_eq!(upd.epoch, Epoch(2));
    assert_eq!(upd.unknown.len(), 2);
    let e0 = b.ta.ledger().get(b.processors[0].real_id()).unwrap();
    assert_eq!(e0.history, vec![0.01, 0.8]);
    let expected = 0.3 * 0.01 + 0.7 * 0.8;
    assert!((e0.predicted - expected).abs() < 1e-12);
    let kp = b.ta.paillier();
    let (_, tok) = &upd.tokens[0];
    assert_eq!(tok.epoch, Epoch(2));
    let encoded = FixedPointCodec::default().encode(expected, Quantity::Trust).unwrap();
    assert_eq!(
        kp.secret.decrypt(&kp.public, &tok.c_trust).unwrap(),
        BigUint::from(encoded)
    );
}

#[test]
fn wire_roundtrips() {
    let (mut b, mut rng) = init(2, 1, 21);
    let (cr, reports) = run_task(&mut b, 0, 1, &[0, 1], |_| 0.75, &mut rng);
    let g = b.ta.group().clone();
    let m = b.ta.paillier().public.modulus().clone();
    assert_eq!(reports[0].feedback.feedback, 0.75);
    assert_eq!(
        ProcessorReport::from_bytes(&g, &m, &reports[0].to_bytes(&g, &m)).unwrap(),
        reports[0]
    );
    assert_eq!(CustomerReport::from_bytes(&g, &cr.to_bytes(&g)).unwrap(), cr);
    let agg = b.rsus[0]
        .process(&cr, &reports, Epoch(1))
        .unwrap()
        .into_aggregate()
        .unwrap();
    assert_eq!(
        AggregatedReport::from_bytes(&g, &m, &agg.to_bytes(&g, &m)).unwrap(),
        agg
    );
    let bytes = reports[1].to_bytes(&g, &m);
    assert!(ProcessorReport::from_bytes(&g, &m, &bytes[..bytes.len() - 1]).is_err());
}
