// SPDX-License-Identifier: Apache-2.0
//! `tpcs` command line: scenario runs, the attack suite and the crypto self-test.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tpcs_sim::{attack_suite, emit_results, run_scenario, selftest, Assertion, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "tpcs",
    version,
    about = "Trust-based privacy-preserving customer selection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write CSV/JSON results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the badmouth, fake-trust, on-off and link-attack scenarios.
    AttackSuite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded crypto property checks at small key sizes.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn report(assertions: &[Assertion]) -> bool {
    for a in assertions {
        let tag = if a.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {}: {}", a.scenario, a.name, a.detail);
    }
    assertions.iter().all(|a| a.passed)
}

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let ok = match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let run = run_scenario(&cfg).context("scenario failed")?;
            emit_results(&run, &out)?;
            let conserved = run.rounds.iter().all(|r| r.conserved());
            let shadow = run.rounds.iter().all(|r| r.tasks.iter().all(|t| t.shadow_matches()));
            report(&[
                Assertion {
                    scenario: "run".into(),
                    name: "report conservation".into(),
                    passed: conserved,
                    detail: format!("{} rounds", run.rounds.len()),
                },
                Assertion {
                    scenario: "run".into(),
                    name: "decrypted sums equal plaintext shadow".into(),
                    passed: shadow,
                    detail: format!("{} tasks", run.rounds.iter().map(|r| r.tasks.len()).sum::<usize>()),
                },
            ])
        }
        Command::AttackSuite { config, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            report(&attack_suite(&cfg, Some(&out))?)
        }
        Command::Selftest { seed } => report(&selftest(seed)?),
    };
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
