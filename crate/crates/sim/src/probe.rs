// SPDX-License-Identifier: Apache-2.0
//! Adversary that tries to link a processor's reports across two tasks.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

/// What an RSU sees of one report, plus the true sender for scoring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LinkRecord {
    #[serde(serialize_with = "hex")]
    pub pid: Vec<u8>,
    #[serde(serialize_with = "hex")]
    pub token: Vec<u8>,
    /// Ground truth, never consulted by the adversary.
    pub processor: usize,
}

fn hex<S: serde::Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    let text: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
    s.serialize_str(&text)
}

/// Pairs every report of `first` with one of `second` and returns the fraction
/// linked to the right sender.
///
/// A report whose token bytes or PID reappear in `second` is linked to that
/// match. The rest are paired by a uniformly random matching over the
/// unclaimed reports, seeded by `seed`.
pub fn link_attack_probe(first: &[LinkRecord], second: &[LinkRecord], seed: u64) -> f64 {
    if first.is_empty() {
        return 0.0;
    }
    let mut claimed = vec![false; second.len()];
    let mut links: Vec<Option<usize>> = vec![None; first.len()];
    for (i, a) in first.iter().enumerate() {
        let hit = second
            .iter()
            .enumerate()
            .find(|(j, b)| !claimed[*j] && (b.token == a.token || b.pid == a.pid));
        if let Some((j, _)) = hit {
            claimed[j] = true;
            links[i] = Some(j);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut free: Vec<usize> = (0..second.len()).filter(|&j| !claimed[j]).collect();
    free.shuffle(&mut rng);
    for slot in links.iter_mut().filter(|l| l.is_none()) {
        *slot = free.pop();
    }
    let correct = first
        .iter()
        .zip(&links)
        .filter(|(a, l)| l.is_some_and(|j| second[j].processor == a.processor))
        .count();
    correct as f64 / first.len() as f64
}
