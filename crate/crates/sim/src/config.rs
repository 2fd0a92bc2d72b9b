// SPDX-License-Identifier: Apache-2.0
//! Scenario configuration, read from TOML. Protocol parameters keep their conventional names (`T0`, `U_threshold`, ...).

use std::path::Path;

use serde::{Deserialize, Serialize};
use tpcs_core::codec::FixedPointCodec;
use tpcs_core::protocol::{InitConfig, VerifyMode};
use tpcs_core::reputation::EngineConfig;

use crate::SimError;

/// Behaviour assigned to a malicious processor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    /// Registered processor that always reports `badmouth_feedback`.
    BadmouthInternal,
    /// Unregistered outsider submitting a self-signed report without a handshake.
    BadmouthExternal,
    /// Honest for `onoff_good_rounds` rounds, then one round at `onoff_attack_feedback`.
    Onoff,
    /// Submits the product of its own and its neighbour's trust tokens.
    FakeTrustCollude,
    /// Keeps its first token and replays it in later epochs.
    FakeTrustReplay,
}

impl Attack {
    pub fn as_str(self) -> &'static str {
        match self {
            Attack::BadmouthInternal => "badmouth-internal",
            Attack::BadmouthExternal => "badmouth-external",
            Attack::Onoff => "onoff",
            Attack::FakeTrustCollude => "fake-trust-collude",
            Attack::FakeTrustReplay => "fake-trust-replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyModeConfig {
    #[default]
    Batch,
    Individual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kappa: u32,
    pub kappa1: u64,
    pub m_h: usize,
    pub sum: usize,
    pub rho: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub c0: f64,
    pub c1: f64,
    pub alpha: f64,
    pub v_max: u32,
    #[serde(rename = "U_threshold")]
    pub u_threshold: f64,
    #[serde(rename = "F_threshold")]
    pub f_threshold: f64,
    #[serde(rename = "T_threshold")]
    pub t_threshold: f64,

    pub seed: u64,
    pub rounds: u64,
    /// Ground-truth quality of every customer unless `customer_qualities` is given.
    pub honest_quality: f64,
    pub customer_qualities: Vec<f64>,
    pub honest_sigma: f64,
    pub badmouth_feedback: f64,
    pub attacks: Vec<Attack>,
    pub onoff_good_rounds: u64,
    pub onoff_attack_feedback: f64,
    pub pseudonyms: u32,
    pub rsus: usize,
    pub ephemeral_bits: u64,
    pub trust_scale: u64,
    pub feedback_scale: u64,
    pub verify_mode: VerifyModeConfig,
    pub perturb_tokens: bool,
    pub rotate_pseudonyms: bool,
    pub forgetting: bool,
    /// Rounds the forgetting factor stays active after a breaker event; absent means forever.
    pub forgetting_rounds: Option<u32>,
    pub convergence_eps: f64,
    pub weight_floor: f64,
    pub distance_eps: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        let codec = FixedPointCodec::default();
        Self {
            kappa: 512,
            kappa1: 512,
            m_h: 10,
            sum: 50,
            rho: 0.2,
            t0: engine.t0,
            c0: engine.c0,
            c1: engine.c1,
            alpha: engine.alpha,
            v_max: engine.v_max,
            u_threshold: engine.u_threshold,
            f_threshold: engine.f_threshold,
            t_threshold: engine.t_threshold,
            seed: 1,
            rounds: 10,
            honest_quality: 0.8,
            customer_qualities: Vec::new(),
            honest_sigma: 0.02,
            badmouth_feedback: 0.05,
            attacks: vec![Attack::BadmouthInternal],
            onoff_good_rounds: 5,
            onoff_attack_feedback: 0.05,
            pseudonyms: 5,
            rsus: 1,
            ephemeral_bits: 64,
            trust_scale: codec.trust_scale,
            feedback_scale: codec.feedback_scale,
            verify_mode: VerifyModeConfig::Batch,
            perturb_tokens: true,
            rotate_pseudonyms: true,
            forgetting: true,
            forgetting_rounds: engine.forgetting_rounds,
            convergence_eps: engine.convergence_eps,
            weight_floor: engine.weight_floor,
            distance_eps: engine.distance_eps,
        }
    }
}

impl ScenarioConfig {
    /// Small key sizes for tests and quick runs; protocol parameters unchanged.
    pub fn desk() -> Self {
        Self {
            kappa: 48,
            kappa1: 64,
            ephemeral_bits: 32,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            u_threshold: self.u_threshold,
            f_threshold: self.f_threshold,
            t_threshold: self.t_threshold,
            c0: self.c0,
            c1: self.c1,
            alpha: self.alpha,
            t0: self.t0,
            v_max: self.v_max,
            convergence_eps: self.convergence_eps,
            weight_floor: self.weight_floor,
            distance_eps: self.distance_eps,
            forgetting_enabled: self.forgetting,
            forgetting_rounds: self.forgetting_rounds,
        }
    }

    pub fn codec(&self) -> Result<FixedPointCodec, SimError> {
        FixedPointCodec::new(self.trust_scale, self.feedback_scale).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn init(&self) -> Result<InitConfig, SimError> {
        Ok(InitConfig {
            kappa: self.kappa,
            kappa1: self.kappa1,
            processors: self.sum,
            customers: self.m_h,
            rsus: self.rsus,
            pseudonyms: self.pseudonyms,
            ephemeral_bits: self.ephemeral_bits,
            codec: self.codec()?,
            engine: self.engine(),
        })
    }

    pub fn verify_mode(&self) -> VerifyMode {
        match self.verify_mode {
            VerifyModeConfig::Batch => VerifyMode::Batch,
            VerifyModeConfig::Individual => VerifyMode::Individual,
        }
    }

    /// Number of malicious processors, `round(rho·sum)`.
    pub fn malicious_count(&self) -> usize {
        (self.rho * self.sum as f64).round() as usize
    }

    /// Attack of processor `index`, or `None` if it is honest.
    pub fn attack_of(&self, index: usize) -> Option<Attack> {
        if index < self.malicious_count() && !self.attacks.is_empty() {
            Some(self.attacks[index % self.attacks.len()])
        } else {
            None
        }
    }

    pub fn customer_quality(&self, customer: usize) -> f64 {
        self.customer_qualities
            .get(customer)
            .copied()
            .unwrap_or(self.honest_quality)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1]");
        }
        if self.sum == 0 {
            return bad("sum must be at least 1");
        }
        if self.m_h == 0 {
            return bad("m_h must be at least 1");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.rsus == 0 {
            return bad("rsus must be at least 1");
        }
        if self.pseudonyms == 0 {
            return bad("pseudonyms must be at least 1");
        }
        if self.rho > 0.0 && self.attacks.is_empty() {
            return bad("rho > 0 needs at least one attack");
        }
        for (name, v) in [
            ("honest_quality", self.honest_quality),
            ("badmouth_feedback", self.badmouth_feedback),
            ("onoff_attack_feedback", self.onoff_attack_feedback),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.customer_qualities.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return bad("customer_qualities must lie in [0, 1]");
        }
        if self.honest_sigma.is_nan() || self.honest_sigma < 0.0 {
            return bad("honest_sigma must be nonnegative");
        }
        self.engine().validate().map_err(|e| SimError::Config(e.to_string()))?;
        let codec = self.codec()?;
        // n has 2·kappa1 - 1 or 2·kappa1 bits; check the smallest such n.
        let n_min = num_bigint::BigUint::from(1u32) << (2 * self.kappa1 - 2).max(1);
        codec
            .check_capacity(self.sum as u64, &n_min)
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_reference_parameters() {
        let c = ScenarioConfig::default();
        assert_eq!((c.kappa, c.kappa1, c.m_h, c.sum), (512, 512, 10, 50));
        assert_eq!(
            (c.rho, c.t0, c.c0, c.c1, c.alpha, c.v_max),
            (0.2, 0.01, 0.1, 0.85, 0.3, 10)
        );
        assert_eq!((c.u_threshold, c.f_threshold, c.t_threshold), (0.5, 0.2, 0.5));
        c.validate().unwrap();
        assert_eq!(c.malicious_count(), 10);
    }

    #[test]
    fn toml_uses_table_names() {
        let cfg = ScenarioConfig::from_toml(
            "kappa = 64\nkappa1 = 96\nT0 = 0.02\nU_threshold = 0.4\nattacks = [\"onoff\", \"fake-trust-replay\"]\n",
        )
        .unwrap();
        assert_eq!(cfg.t0, 0.02);
        assert_eq!(cfg.u_threshold, 0.4);
        assert_eq!(cfg.attacks, vec![Attack::Onoff, Attack::FakeTrustReplay]);
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ScenarioConfig::from_toml("rho = 1.5").is_err());
        assert!(ScenarioConfig::from_toml("sum = 0").is_err());
        assert!(ScenarioConfig::from_toml("unknown_key = 1").is_err());
        assert!(ScenarioConfig::from_toml("kappa1 = 16\ntrust_scale = 1000000").is_err());
        assert!(ScenarioConfig::from_toml("c1 = 1.0").is_err());
    }

    #[test]
    fn attack_assignment_is_round_robin() {
        let cfg = ScenarioConfig {
            sum: 10,
            rho: 0.5,
            attacks: vec![Attack::Onoff, Attack::FakeTrustCollude],
            ..ScenarioConfig::desk()
        };
        let got: Vec<_> = (0..10).map(|i| cfg.attack_of(i)).collect();
        assert_eq!(got[0], Some(Attack::Onoff));
        assert_eq!(got[1], Some(Attack::FakeTrustCollude));
        assert_eq!(got[4], Some(Attack::Onoff));
        assert!(got[5..].iter().all(Option::is_none));
    }
}
