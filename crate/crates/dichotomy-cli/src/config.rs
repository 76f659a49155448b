use std::path::Path;

use dichotomy::config::{LogBase, Tolerances};
use dichotomy::oracle::ORACLE_SEED;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Everything besides the command line that can change a number in the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub log_base: LogBase,
    pub format: Format,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { tolerances: Tolerances::default(), log_base: LogBase::Nats, format: Format::Json, seed: ORACLE_SEED }
    }
}

pub const CONFIG_ENV: &str = "DICHOTOMY_CONFIG";

impl RunConfig {
    /// Explicit path first, then $DICHOTOMY_CONFIG, then defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty());
        let path = explicit.map(Path::to_path_buf).or(from_env.map(Into::into));
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("bad config {}: {e}", p.display())))?
            }
        };
        cfg.tolerances.validate().map_err(CliError::Input)?;
        Ok(cfg)
    }

    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
