// SPDX-License-Identifier: Apache-2.0
//! Per-task trust quality, EWMA prediction and the circuit breaker.

use super::EngineConfig;

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `1 - |f - rs|^(v·c0)` below `F_threshold`, `1 - |f - rs|` otherwise; clamped to `[0, 1]`.
pub fn trust_quality(feedback: f64, rs: f64, iterations: u32, cfg: &EngineConfig) -> f64 {
    let gap = libm::fabs(feedback - rs);
    let raw = if gap < cfg.f_threshold {
        1.0 - libm::pow(gap, iterations as f64 * cfg.c0)
    } else {
        1.0 - gap
    };
    clamp_unit(raw)
}

/// `α·T_(i-1) + (1 - α)·T_i`
pub fn ewma_predict(previous: f64, current: f64, cfg: &EngineConfig) -> f64 {
    clamp_unit(cfg.alpha * previous + (1.0 - cfg.alpha) * current)
}

/// Breaker flag for one processor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BreakerState {
    pub tripped: bool,
    /// Remaining rounds of forgetting when persistence is bounded.
    pub rounds_left: Option<u32>,
}

/// Resets to `T0` when `T_(i-1) - T_i > T_threshold`; while tripped, scales the prediction by `c1`.
pub fn circuit_breaker(
    previous: f64,
    current: f64,
    predicted: f64,
    state: BreakerState,
    cfg: &EngineConfig,
) -> (f64, BreakerState) {
    if previous - current > cfg.t_threshold {
        let tripped = BreakerState {
            tripped: true,
            rounds_left: cfg.forgetting_rounds,
        };
        return (clamp_unit(cfg.t0), tripped);
    }
    if state.tripped && cfg.forgetting_enabled {
        let next = match state.rounds_left {
            None => state,
            Some(0 | 1) => BreakerState::default(),
            Some(n) => BreakerState {
                tripped: true,
                rounds_left: Some(n - 1),
            },
        };
        return (clamp_unit(cfg.c1 * predicted), next);
    }
    (clamp_unit(predicted), state)
}
