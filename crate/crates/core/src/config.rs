//! Run configuration, read from a TOML file.
//!
//! ```toml
//! maxDepth = 9
//! horizon = 10000
//! seed = 1
//! budget = 64
//! gammaSpan = 16
//! kScript = [[3, 40], [1, 120]]     # (odd element, stage)
//!
//! [[adversaries]]
//! index = 0
//! seed = 11
//! psi = { mode = "faithful", attack = 0.5 }
//! phi = { mode = "laggard", period = 3 }
//! theta = { mode = "chaotic", rate = 0.2 }
//! ```
//!
//! Roles left out of an adversary entry are silent. `kMachine` can replace
//! `kScript` with a seeded generator of odd numbers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_BUDGET: u64 = 64;
pub const DEFAULT_GAMMA_SPAN: u64 = 16;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Silent,
    Faithful,
    Laggard,
    Chaotic,
}

/// Behaviour of one adversary on one role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    #[serde(default)]
    pub mode: Mode,
    /// Laggards only act on stages divisible by `period`.
    #[serde(default = "default_period")]
    pub period: u64,
    /// Chaotic emission probability per stage.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Faithful Ψ/Θ keep inputs `0..=min(stage, span)` convergent; without
    /// a span they follow the stage. Chaotic emissions pick inputs up to
    /// `span` (default 16).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<u64>,
    /// Probability that a faithful Ψ enumerates an input into `W_e` after
    /// its computation was broken by a change to `D` (at most one per stage).
    #[serde(default)]
    pub attack: f64,
    /// How far past the fresh-number floor a faithful Φ keeps covering.
    #[serde(default = "default_slack")]
    pub slack: u64,
}

fn default_period() -> u64 {
    4
}

fn default_rate() -> f64 {
    0.25
}

fn default_slack() -> u64 {
    8
}

impl Default for BehaviorSpec {
    fn default() -> Self {
        Self::of(Mode::Silent)
    }
}

impl BehaviorSpec {
    pub fn of(mode: Mode) -> Self {
        Self {
            mode,
            period: default_period(),
            rate: default_rate(),
            span: None,
            attack: 0.0,
            slack: default_slack(),
        }
    }

    pub fn is_silent(&self) -> bool {
        self.mode == Mode::Silent
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub index: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BehaviorSpec::is_silent")]
    pub psi: BehaviorSpec,
    #[serde(default, skip_serializing_if = "BehaviorSpec::is_silent")]
    pub phi: BehaviorSpec,
    #[serde(default, skip_serializing_if = "BehaviorSpec::is_silent")]
    pub theta: BehaviorSpec,
}

impl AdversarySpec {
    pub fn silent(index: u64) -> Self {
        Self {
            index,
            seed: 0,
            psi: BehaviorSpec::default(),
            phi: BehaviorSpec::default(),
            theta: BehaviorSpec::default(),
        }
    }
}

/// Seeded generator for `K`: at each stage, with probability `rate`, the
/// least odd number below `bound` not yet in `K` enters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMachine {
    pub seed: u64,
    pub rate: f64,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct RunConfig {
    pub max_depth: u64,
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// R-nodes build `Γ` on `0..gammaSpan`; `K` must lie below it.
    #[serde(default = "default_gamma_span")]
    pub gamma_span: u64,
    #[serde(default)]
    pub k_script: Vec<(u64, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_machine: Option<KMachine>,
    #[serde(default)]
    pub adversaries: Vec<AdversarySpec>,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

fn default_gamma_span() -> u64 {
    DEFAULT_GAMMA_SPAN
}

impl RunConfig {
    pub fn new(max_depth: u64, horizon: u64) -> Self {
        Self {
            max_depth,
            horizon,
            seed: 0,
            budget: DEFAULT_BUDGET,
            gamma_span: DEFAULT_GAMMA_SPAN,
            k_script: Vec::new(),
            k_machine: None,
            adversaries: Vec::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.max_depth == 0 {
            return invalid("maxDepth must be at least 1".into());
        }
        if self.horizon == 0 {
            return invalid("horizon must be at least 1".into());
        }
        if self.budget == 0 {
            return invalid("budget must be at least 1".into());
        }
        if let Some(&(k, _)) = self.k_script.iter().find(|(k, _)| k % 2 == 0) {
            return invalid(format!("kScript element {k} is even"));
        }
        if let Some(&(k, _)) = self.k_script.iter().find(|(k, _)| *k >= self.gamma_span) {
            return invalid(format!(
                "kScript element {k} not below gammaSpan {}",
                self.gamma_span
            ));
        }
        if let Some(&(_, s)) = self.k_script.iter().find(|(_, s)| *s == 0) {
            return invalid(format!("kScript stage {s}: stages start at 1"));
        }
        if let Some(m) = &self.k_machine {
            if !(0.0..=1.0).contains(&m.rate) {
                return invalid(format!("kMachine rate {} outside [0, 1]", m.rate));
            }
            if m.bound > self.gamma_span {
                return invalid(format!(
                    "kMachine bound {} exceeds gammaSpan {}",
                    m.bound, self.gamma_span
                ));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.adversaries {
            if !seen.insert(a.index) {
                return invalid(format!("adversary index {} listed twice", a.index));
            }
            for (role, b) in [("psi", &a.psi), ("phi", &a.phi), ("theta", &a.theta)] {
                if b.period == 0 {
                    return invalid(format!("adversary {} {role}: period must be >= 1", a.index));
                }
                for (name, p) in [("rate", b.rate), ("attack", b.attack)] {
                    if !(0.0..=1.0).contains(&p) {
                        return invalid(format!(
                            "adversary {} {role}: {name} {p} outside [0, 1]",
                            a.index
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}
