use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand. Values given on the command line
/// take precedence over those read from a config file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub verbosity: Option<u8>,
}

impl CliConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("malformed config file {}", path.display()))
    }

    /// Fields of `over` replace those of `self` where present.
    pub fn merged(&self, over: &CliConfig) -> CliConfig {
        CliConfig {
            seed: over.seed.or(self.seed),
            threads: over.threads.or(self.threads),
            verbosity: over.verbosity.or(self.verbosity),
        }
    }
}

/// Seed precedence: explicit flag, then `IES_SEED`, then the config file, then 0.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(raw) = env {
        return raw
            .trim()
            .parse()
            .map_err(|_| format!("IES_SEED must be a non-negative integer, got `{raw}`"));
    }
    Ok(file.unwrap_or(0))
}
