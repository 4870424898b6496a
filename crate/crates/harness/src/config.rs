use std::path::{Path, PathBuf};

use pregrasp::env::{EnvConfig, EnvError};
use pregrasp::sac::{SacError, TrainerConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Parent directory of run directories.
    pub dir: PathBuf,
    pub run_name: String,
    /// Write 0 for wall time so that metrics files are byte-identical across
    /// runs with the same seed.
    pub deterministic: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
            run_name: "run".into(),
            deterministic: true,
        }
    }
}

/// The JSON document accepted by `pregrasp train`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub output: OutputConfig,
}

fn nested(section: &str, field: String, message: String) -> HarnessError {
    HarnessError::InvalidConfig {
        field: format!("{section}.{field}"),
        message,
    }
}

impl RunConfig {
    /// Parses and validates. Parse errors name the offending key path.
    pub fn from_json_str(text: &str) -> Result<Self, HarnessError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let structural = e.inner().is_data();
            HarnessError::InvalidConfig {
                field: if path == "." || !structural { "<root>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate().map_err(|e| match e {
            EnvError::InvalidConfig { field, message } => nested("env", field, message),
            other => HarnessError::Env(other),
        })?;
        self.trainer.validate().map_err(|e| match e {
            SacError::InvalidConfig { field, message } => nested("trainer", field, message),
            other => HarnessError::Sac(other),
        })?;
        if self.output.run_name.is_empty()
            || self.output.run_name.contains(['/', '\\'])
            || self.output.run_name == "."
            || self.output.run_name == ".."
        {
            return Err(HarnessError::InvalidConfig {
                field: "output.run_name".into(),
                message: format!("must be a plain directory name, got {:?}", self.output.run_name),
            });
        }
        Ok(())
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output.dir.join(&self.output.run_name)
    }

    /// SHA-256 over the environment and trainer sections, as hex. Output
    /// settings do not affect the digest.
    pub fn digest(&self) -> String {
        config_digest(&self.env, &self.trainer)
    }
}

pub fn config_digest(env: &EnvConfig, trainer: &TrainerConfig) -> String {
    let doc = serde_json::json!({ "env": env, "trainer": trainer });
    let bytes = serde_json::to_vec(&doc).expect("configs serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
