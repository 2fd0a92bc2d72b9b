// SPDX-License-Identifier: Apache-2.0
//! Deterministic simulator for trust-based customer selection: scenario
//! configuration, adversaries, metrics and result files.

pub mod config;
pub mod emit;
pub mod probe;
pub mod scenario;
pub mod suite;

pub use config::{Attack, ScenarioConfig, VerifyModeConfig};
pub use emit::{emit_results, RESULT_FILES};
pub use probe::{link_attack_probe, LinkRecord};
pub use scenario::{run_scenario, OpRow, ProcessorTrust, RejectionRow, RoundMetrics, ScenarioRun, TaskMetrics};
pub use suite::{attack_suite, selftest, Assertion};

use tpcs_core::protocol::ProtocolError;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("protocol failure: {0}")]
    Protocol(#[from] ProtocolError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}
