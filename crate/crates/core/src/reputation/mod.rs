// SPDX-License-Identifier: Apache-2.0
//! Plaintext analytics: filtering truth discovery and trust evolution.

mod trust;
mod truth;

pub use trust::{circuit_breaker, ewma_predict, trust_quality, BreakerState};
pub use truth::{distance, filter_step, run_truth_discovery, score_step, weight_step, ReputationState, TruthDiscovery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid engine parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("empty feedback table")]
    EmptyFeedback,
    #[error("feedback {0} outside [0, 1]")]
    FeedbackRange(f64),
    #[error("weights sum to zero")]
    ZeroWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Feedback farther than this from the current score is filtered out.
    pub u_threshold: f64,
    /// Distance below which the reward branch of the quality function applies.
    pub f_threshold: f64,
    /// Trust drop that trips the circuit breaker.
    pub t_threshold: f64,
    /// Reward sensitivity.
    pub c0: f64,
    /// Forgetting factor applied after the breaker trips.
    pub c1: f64,
    /// EWMA weight on the older trust value.
    pub alpha: f64,
    pub t0: f64,
    pub v_max: u32,
    pub convergence_eps: f64,
    pub weight_floor: f64,
    pub distance_eps: f64,
    pub forgetting_enabled: bool,
    /// Rounds the forgetting factor stays active; `None` keeps it forever.
    pub forgetting_rounds: Option<u32>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            u_threshold: 0.5,
            f_threshold: 0.2,
            t_threshold: 0.5,
            c0: 0.1,
            c1: 0.85,
            alpha: 0.3,
            t0: 0.01,
            v_max: 10,
            convergence_eps: 1e-4,
            weight_floor: 1e-6,
            distance_eps: 1e-9,
            forgetting_enabled: true,
            forgetting_rounds: None,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let unit_half_open = |v: f64| v > 0.0 && v <= 1.0;
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !unit_half_open(self.u_threshold) {
            return Err(EngineError::InvalidParameter("U_threshold"));
        }
        if !unit_half_open(self.f_threshold) {
            return Err(EngineError::InvalidParameter("F_threshold"));
        }
        if !unit_half_open(self.t_threshold) {
            return Err(EngineError::InvalidParameter("T_threshold"));
        }
        if !open(self.c0) {
            return Err(EngineError::InvalidParameter("c0"));
        }
        if !open(self.c1) {
            return Err(EngineError::InvalidParameter("c1"));
        }
        if !open(self.alpha) {
            return Err(EngineError::InvalidParameter("alpha"));
        }
        if !(0.0..=1.0).contains(&self.t0) {
            return Err(EngineError::InvalidParameter("T0"));
        }
        if self.v_max == 0 {
            return Err(EngineError::InvalidParameter("v_max"));
        }
        if !(self.convergence_eps > 0.0 && self.weight_floor > 0.0 && self.distance_eps > 0.0) {
            return Err(EngineError::InvalidParameter("numerical tolerance"));
        }
        Ok(())
    }
}
