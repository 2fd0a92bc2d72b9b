// SPDX-License-Identifier: Apache-2.0
//! CSV and JSON result files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::scenario::ScenarioRun;
use crate::SimError;

pub const RESULT_FILES: [&str; 5] = [
    "reputation.csv",
    "trust.csv",
    "rejections.csv",
    "ops.csv",
    "summary.json",
];

#[derive(Serialize)]
struct RoundSummary {
    round: u64,
    submitted: usize,
    accepted: usize,
    rejected: usize,
    conserved: bool,
    shadow_equal: bool,
    pairings: usize,
    modexps: u64,
    mean_final_rs: Option<f64>,
    mean_honest_trust: Option<f64>,
    mean_malicious_trust: Option<f64>,
    breaker_events: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a crate::ScenarioConfig,
    rounds: Vec<RoundSummary>,
    pseudonym_wraps: u32,
    all_conserved: bool,
    all_shadow_equal: bool,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |e| SimError::Io(path.display().to_string(), e)
}

/// Writes the five result files into `out_dir`, creating it if needed.
pub fn emit_results(run: &ScenarioRun, out_dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut w = csv::Writer::from_path(out_dir.join("reputation.csv"))?;
    w.write_record(["round", "customer", "iteration", "RS"])?;
    for r in &run.rounds {
        for t in &r.tasks {
            for (i, rs) in t.trajectory.iter().enumerate() {
                w.write_record([
                    r.round.to_string(),
                    t.customer.to_string(),
                    i.to_string(),
                    rs.to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(io_err(out_dir))?;

    let mut w = csv::Writer::from_path(out_dir.join("trust.csv"))?;
    w.write_record(["round", "processor-real-id", "trust", "breaker_flag"])?;
    for r in &run.rounds {
        for p in &r.trust {
            w.write_record([
                r.round.to_string(),
                p.real_id.clone(),
                p.trust.to_string(),
                u8::from(p.breaker_flag).to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(out_dir))?;

    let mut w = csv::Writer::from_path(out_dir.join("rejections.csv"))?;
    w.write_record(["round", "pid", "reason"])?;
    for r in &run.rounds {
        for x in &r.rejections {
            w.write_record([r.round.to_string(), x.pid.clone(), x.reason.to_string()])?;
        }
    }
    w.flush().map_err(io_err(out_dir))?;

    let mut w = csv::Writer::from_path(out_dir.join("ops.csv"))?;
    w.write_record(["round", "check_type", "pairing_count", "batch_size"])?;
    for r in &run.rounds {
        for o in &r.ops {
            w.write_record([
                r.round.to_string(),
                o.check_type.to_string(),
                o.pairing_count.to_string(),
                o.batch_size.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(out_dir))?;

    let rounds: Vec<RoundSummary> = run
        .rounds
        .iter()
        .map(|r| RoundSummary {
            round: r.round,
            submitted: r.submitted,
            accepted: r.accepted,
            rejected: r.rejected(),
            conserved: r.conserved(),
            shadow_equal: r.tasks.iter().all(|t| t.shadow_matches()),
            pairings: r.pairings(),
            modexps: r.modexps,
            mean_final_rs: mean(r.tasks.iter().filter_map(|t| t.final_rs())),
            mean_honest_trust: mean(r.trust.iter().filter(|t| t.attack.is_none()).map(|t| t.trust)),
            mean_malicious_trust: mean(r.trust.iter().filter(|t| t.attack.is_some()).map(|t| t.trust)),
            breaker_events: r.breaker_events.clone(),
        })
        .collect();
    let summary = Summary {
        config: &run.config,
        all_conserved: rounds.iter().all(|r| r.conserved),
        all_shadow_equal: rounds.iter().all(|r| r.shadow_equal),
        rounds,
        pseudonym_wraps: run.pseudonym_wraps,
    };
    let path = out_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(())
}
