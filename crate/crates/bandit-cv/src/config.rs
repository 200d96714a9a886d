//! Run configuration: a TOML file with flag overrides on top.
//!
//! Everything except the instance and the policy list has a validated
//! default, and a config round-trips losslessly through serialization.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{make_instance, Instance};
use crate::error::{Error, Result};
use crate::harness::PolicySpec;
use crate::policy::{PolicyKind, PolicyParams};

/// Built-in instance id, or a fully inline arm list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Builtin(u32),
    Inline(Instance),
}

impl InstanceSpec {
    /// Materializes the instance; built-ins get `k` arms.
    pub fn build(&self, k: usize) -> Result<Instance> {
        match self {
            Self::Builtin(id) => make_instance(*id, k),
            Self::Inline(inst) => {
                inst.validate()?;
                Ok(inst.clone())
            }
        }
    }
}

/// One policy entry: the string identifier plus its tunables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub id: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_pulls: Option<usize>,
}

impl PolicyConfig {
    pub fn from_id(id: &str) -> Self {
        Self {
            id: id.to_string(),
            alpha: default_alpha(),
            scale: default_scale(),
            init_pulls: None,
        }
    }

    pub fn to_spec(&self) -> Result<PolicySpec> {
        let kind = PolicyKind::parse(&self.id)?;
        if !(self.alpha > 1.0) {
            return Err(Error::Config(format!(
                "policy {}: alpha must be > 1, got {}",
                self.id, self.alpha
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::Config(format!(
                "policy {}: scale must be > 0, got {}",
                self.id, self.scale
            )));
        }
        Ok(PolicySpec {
            kind,
            params: PolicyParams {
                alpha: self.alpha,
                scale: self.scale,
                init_pulls: self.init_pulls,
            },
        })
    }
}

fn default_alpha() -> f64 {
    2.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_horizon() -> usize {
    10_000
}

fn default_repetitions() -> usize {
    100
}

fn default_checkpoints() -> usize {
    100
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// A complete experiment description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    pub policies: Vec<PolicyConfig>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Number of evenly spaced checkpoint rounds (the horizon is always one).
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        // The parse error carries line/column positions.
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if self.repetitions < 2 {
            return Err(Error::Config("need at least 2 repetitions".into()));
        }
        if self.checkpoints < 2 {
            return Err(Error::Config("need at least 2 checkpoints".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        for p in &self.policies {
            p.to_spec()?;
        }
        self.instance.build(10)?;
        Ok(())
    }

    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>> {
        self.policies.iter().map(PolicyConfig::to_spec).collect()
    }

    /// The checkpoint rounds this config asks for.
    pub fn checkpoint_rounds(&self) -> Vec<usize> {
        spaced_checkpoints(self.horizon, self.checkpoints)
    }
}

/// `count` evenly spaced rounds ending exactly at the horizon.
pub fn spaced_checkpoints(horizon: usize, count: usize) -> Vec<usize> {
    let count = count.max(1);
    let mut cps: Vec<usize> =
        (1..=count).map(|i| i * horizon / count).filter(|&c| c > 0).collect();
    cps.push(horizon);
    cps.dedup();
    cps
}
