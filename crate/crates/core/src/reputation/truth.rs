// SPDX-License-Identifier: Apache-2.0
//! Filtering truth discovery: filter, weight and score until the score settles.

use alloc::vec::Vec;

use super::{EngineConfig, EngineError};

/// Squared distance `(f - rs)^2`.
pub fn distance(f: f64, rs: f64) -> f64 {
    (f - rs) * (f - rs)
}

/// One task's evaluation state. `retained` and `weights` are indexed like `feedback`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReputationState {
    pub task: u64,
    pub feedback: Vec<f64>,
    pub retained: Vec<bool>,
    pub weights: Vec<f64>,
    pub rs: f64,
    pub iteration: u32,
    /// Set when a filter pass would have removed every processor.
    pub filter_skipped: bool,
}

impl ReputationState {
    pub fn new(task: u64, initial_rs: f64, feedback: &[f64]) -> Result<Self, EngineError> {
        if feedback.is_empty() {
            return Err(EngineError::EmptyFeedback);
        }
        if let Some(&bad) = feedback.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(EngineError::FeedbackRange(bad));
        }
        Ok(Self {
            task,
            feedback: feedback.to_vec(),
            retained: alloc::vec![true; feedback.len()],
            weights: alloc::vec![0.0; feedback.len()],
            rs: initial_rs,
            iteration: 0,
            filter_skipped: false,
        })
    }

    pub fn retained_count(&self) -> usize {
        self.retained.iter().filter(|r| **r).count()
    }

    fn retained_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.retained.iter().enumerate().filter(|(_, r)| **r).map(|(i, _)| i)
    }
}

/// Keeps retained feedback with `|f - rs| < U_threshold`; skips the pass if none would remain.
pub fn filter_step(state: &ReputationState, cfg: &EngineConfig) -> ReputationState {
    let mut next = state.clone();
    let keep: Vec<bool> = state
        .feedback
        .iter()
        .zip(&state.retained)
        .map(|(f, r)| *r && libm::fabs(f - state.rs) < cfg.u_threshold)
        .collect();
    if keep.iter().any(|k| *k) {
        next.retained = keep;
    } else {
        next.filter_skipped = true;
    }
    next
}

/// `w_j = ln(Σ d / max(d_j, distance_eps))`, floored at `weight_floor`.
pub fn weight_step(state: &ReputationState, cfg: &EngineConfig) -> ReputationState {
    let mut next = state.clone();
    let total: f64 = state
        .retained_indices()
        .map(|i| distance(state.feedback[i], state.rs))
        .sum();
    for (i, w) in next.weights.iter_mut().enumerate() {
        *w = if state.retained[i] {
            let d = distance(state.feedback[i], state.rs).max(cfg.distance_eps);
            libm::log(total / d).max(cfg.weight_floor)
        } else {
            0.0
        };
    }
    next
}

/// `rs = Σ w f / Σ w` over the retained set.
pub fn score_step(state: &ReputationState, _cfg: &EngineConfig) -> Result<ReputationState, EngineError> {
    let (num, den) = state.retained_indices().fold((0.0, 0.0), |(n, d), i| {
        (n + state.weights[i] * state.feedback[i], d + state.weights[i])
    });
    if den <= 0.0 {
        return Err(EngineError::ZeroWeight);
    }
    let mut next = state.clone();
    next.rs = num / den;
    next.iteration += 1;
    Ok(next)
}

/// Outcome of one task's evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthDiscovery {
    pub rs: f64,
    pub iterations: u32,
    pub retained: Vec<bool>,
    pub weights: Vec<f64>,
    /// `rs` before the first iteration and after each one.
    pub trajectory: Vec<f64>,
    pub filter_skipped: bool,
}

impl TruthDiscovery {
    /// Score after `iteration` passes; converged runs hold their final value.
    pub fn rs_at(&self, iteration: usize) -> f64 {
        self.trajectory[iteration.min(self.trajectory.len() - 1)]
    }
}

pub fn run_truth_discovery(
    initial_rs: f64,
    feedback: &[f64],
    cfg: &EngineConfig,
) -> Result<TruthDiscovery, EngineError> {
    let mut state = ReputationState::new(0, initial_rs, feedback)?;
    let mut trajectory = alloc::vec![initial_rs];
    let mut skipped = false;
    while state.iteration < cfg.v_max {
        let filtered = filter_step(&state, cfg);
        skipped |= filtered.filter_skipped;
        let weighted = weight_step(&filtered, cfg);
        let next = score_step(&weighted, cfg)?;
        let delta = libm::fabs(next.rs - state.rs);
        trajectory.push(next.rs);
        state = next;
        if delta < cfg.convergence_eps {
            break;
        }
    }
    log::trace!(
        "truth discovery settled at {} after {} iterations",
        state.rs,
        state.iteration
    );
    Ok(TruthDiscovery {
        rs: state.rs,
        iterations: state.iteration,
        retained: state.retained,
        weights: state.weights,
        trajectory,
        filter_skipped: skipped,
    })
}
