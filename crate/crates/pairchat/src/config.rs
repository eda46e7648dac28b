//! Scenario configuration.
//!
//! A scenario is a TOML document with a strict schema (unknown keys are
//! rejected). Every field has a default, so an empty file is valid:
//!
//! ```toml
//! mode = "perpair"          # perpair | binomial | mechanistic
//! rounds = 64
//! seeds = [1, 2, 3]
//!
//! [dynamics]
//! alpha = 0.95
//! beta = 0.8
//! gamma = 0.1
//! c0 = 0.5
//! n_agents = 16384
//!
//! [mechanistic]
//! album_capacity = 10
//! benign_pool = 1000
//! history_len = 3
//! retrieval_rate = 1.0
//! symptom_q = 1.0
//! symptom_a = 1.0
//! initial_targets = 1      # optional, defaults to round(c0 * n_agents)
//!
//! [theory]
//! dt = 0.001
//!
//! [output]
//! path = "run.csv"          # optional, stdout otherwise
//! format = "csv"            # csv | json
//! ```
//!
//! Command-line flags are applied on top of the file.

use std::path::{Path, PathBuf};

use pairchat_core::{BehaviorParams, DynamicsParams, MechScenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Perpair,
    Binomial,
    Mechanistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c0: f64,
    pub n_agents: usize,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let p = DynamicsParams::figure_defaults();
        Self {
            alpha: p.alpha(),
            beta: p.beta(),
            gamma: p.gamma(),
            c0: p.c0(),
            n_agents: p.n_agents(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechSection {
    pub album_capacity: usize,
    pub benign_pool: usize,
    pub history_len: usize,
    pub retrieval_rate: f64,
    pub symptom_q: f64,
    pub symptom_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_targets: Option<usize>,
}

impl Default for MechSection {
    fn default() -> Self {
        Self {
            album_capacity: 10,
            benign_pool: 1000,
            history_len: 3,
            retrieval_rate: 1.0,
            symptom_q: 1.0,
            symptom_a: 1.0,
            initial_targets: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheorySection {
    pub dt: f64,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mode: ModeName,
    pub rounds: u64,
    pub seeds: Vec<u64>,
    pub dynamics: DynamicsSection,
    pub mechanistic: MechSection,
    pub theory: TheorySection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mode: ModeName::Perpair,
            rounds: 64,
            seeds: vec![1],
            dynamics: DynamicsSection::default(),
            mechanistic: MechSection::default(),
            theory: TheorySection::default(),
            output: OutputSection::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        // plain data with string keys; serialization cannot fail
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dynamics_params()?;
        if self.mode == ModeName::Mechanistic {
            self.mech_scenario()?;
        }
        if self.seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        if !(self.theory.dt > 0.0 && self.theory.dt.is_finite()) {
            return Err(CliError::Config(format!(
                "dt must be positive, got {}",
                self.theory.dt
            )));
        }
        Ok(())
    }

    pub fn dynamics_params(&self) -> Result<DynamicsParams, CliError> {
        let d = &self.dynamics;
        Ok(DynamicsParams::new(
            d.alpha, d.beta, d.gamma, d.c0, d.n_agents,
        )?)
    }

    pub fn initial_targets(&self) -> usize {
        self.mechanistic
            .initial_targets
            .unwrap_or_else(|| (self.dynamics.c0 * self.dynamics.n_agents as f64).round() as usize)
    }

    pub fn mech_scenario(&self) -> Result<MechScenario, CliError> {
        let m = &self.mechanistic;
        let behavior = BehaviorParams::new(m.retrieval_rate, m.symptom_q, m.symptom_a)?;
        let n = self.dynamics.n_agents;
        if n < 2 {
            return Err(pairchat_core::Error::TooFewAgents(n).into());
        }
        if m.album_capacity == 0 {
            return Err(pairchat_core::Error::ZeroCapacity.into());
        }
        if m.benign_pool == 0 {
            return Err(pairchat_core::Error::EmptyBenignPool.into());
        }
        let targets = self.initial_targets();
        if targets > n {
            return Err(pairchat_core::Error::TooManyCarriers {
                requested: targets,
                n_agents: n,
            }
            .into());
        }
        Ok(MechScenario {
            n_agents: n,
            album_capacity: m.album_capacity,
            benign_pool: m.benign_pool,
            history_len: m.history_len,
            behavior,
            initial_targets: targets,
            rounds: self.rounds,
        })
    }

    /// Set one numeric scenario key by name; used by sweeps.
    pub fn set_key(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        let as_count = |v: f64| -> Result<usize, CliError> {
            if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
                Ok(v as usize)
            } else {
                Err(CliError::Config(format!(
                    "{key} needs a non-negative integer, got {v}"
                )))
            }
        };
        match key {
            "alpha" => self.dynamics.alpha = value,
            "beta" => self.dynamics.beta = value,
            "gamma" => self.dynamics.gamma = value,
            "c0" => self.dynamics.c0 = value,
            "n" | "n_agents" => self.dynamics.n_agents = as_count(value)?,
            "rounds" => self.rounds = as_count(value)? as u64,
            "album_capacity" => self.mechanistic.album_capacity = as_count(value)?,
            "benign_pool" => self.mechanistic.benign_pool = as_count(value)?,
            "history_len" => self.mechanistic.history_len = as_count(value)?,
            "retrieval_rate" => self.mechanistic.retrieval_rate = value,
            "symptom_q" => self.mechanistic.symptom_q = value,
            "symptom_a" => self.mechanistic.symptom_a = value,
            "initial_targets" => self.mechanistic.initial_targets = Some(as_count(value)?),
            "dt" => self.theory.dt = value,
            other => return Err(CliError::Config(format!("unknown sweep key `{other}`"))),
        }
        Ok(())
    }
}

/// Parse `1,2,5` or an inclusive range `1-8` (or a mix: `1-3,10`).
pub fn parse_seed_list(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Config(format!("invalid seed list `{text}`"));
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// `key=v1,v2,...` for sweeps.
pub fn parse_axis(text: &str) -> Result<(String, Vec<f64>), CliError> {
    let (key, values) = text
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("axis `{text}` is not key=v1,v2,...")))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::Config(format!("axis `{key}`: `{v}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(CliError::Config(format!("axis `{key}` has no values")));
    }
    Ok((key.trim().to_string(), values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_defaults() {
        assert_eq!(
            ScenarioConfig::from_toml_str("").unwrap(),
            ScenarioConfig::default()
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_toml_str("bogus = 1").is_err());
        assert!(ScenarioConfig::from_toml_str("[dynamics]\ndelta = 0.3").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = ScenarioConfig {
            mode: ModeName::Mechanistic,
            ..Default::default()
        };
        cfg.seeds = vec![3, 1, 4];
        cfg.dynamics.gamma = 0.123456789012345;
        cfg.mechanistic.initial_targets = Some(7);
        cfg.output.path = Some("x/y.csv".into());
        cfg.output.format = Format::Json;
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn validation() {
        let mut cfg = ScenarioConfig::default();
        cfg.dynamics.beta = 1.5;
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let mut cfg = ScenarioConfig::default();
        cfg.dynamics.n_agents = 1;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::default();
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig {
            mode: ModeName::Mechanistic,
            ..Default::default()
        };
        cfg.mechanistic.album_capacity = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seed_list("1-8").unwrap(), (1..=8).collect::<Vec<_>>());
        assert_eq!(parse_seed_list("3, 1,7-8").unwrap(), vec![3, 1, 7, 8]);
        assert!(parse_seed_list("").is_err());
        assert!(parse_seed_list("5-2").is_err());
        assert!(parse_seed_list("x").is_err());
    }

    #[test]
    fn axes() {
        assert_eq!(
            parse_axis("alpha=0.5,0.75").unwrap(),
            ("alpha".to_string(), vec![0.5, 0.75])
        );
        assert!(parse_axis("alpha=").is_err());
        assert!(parse_axis("alpha").is_err());
        let mut cfg = ScenarioConfig::default();
        assert!(cfg.set_key("nope", 1.0).is_err());
        assert!(cfg.set_key("n", 2.5).is_err());
        cfg.set_key("album_capacity", 6.0).unwrap();
        assert_eq!(cfg.mechanistic.album_capacity, 6);
    }
}
