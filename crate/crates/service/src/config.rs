use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use compleval_core::gateway::{BackendConfig, Decoding};
use serde::{Deserialize, Serialize};

use crate::rate_limit::DEFAULT_LIMIT_PER_HOUR;

pub const ENV_PREFIX: &str = "COMPLEVAL_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub telemetry_path: PathBuf,
    pub rate_limit_per_hour: usize,
    /// Withhold automatic completions requested in the middle of an identifier.
    pub smart_invocation: bool,
    /// Fixes the suggestion shuffle; random per request when absent.
    pub shuffle_seed: Option<u64>,
    pub backends: Vec<BackendConfig>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8000)),
            telemetry_path: PathBuf::from("telemetry.jsonl"),
            rate_limit_per_hour: DEFAULT_LIMIT_PER_HOUR,
            smart_invocation: false,
            shuffle_seed: None,
            backends: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("environment variable {var}: {msg}")]
    Env { var: String, msg: String },
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse { path: origin.to_path_buf(), source })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    /// Applies `COMPLEVAL_*` overrides:
    /// `BIND`, `TELEMETRY_PATH`, `RATE_LIMIT`, `SMART_INVOCATION`, `SHUFFLE_SEED`, and
    /// `BACKENDS` as a comma-separated list of `model_id=url` (greedy decoding, default
    /// limits), which replaces the configured backends.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (key, value) in vars {
            let (key, value) = (key.as_ref(), value.as_ref());
            let Some(name) = key.strip_prefix(ENV_PREFIX) else { continue };
            let bad = |msg: String| ConfigError::Env { var: key.to_string(), msg };
            match name {
                "BIND" => self.bind = value.parse().map_err(|e| bad(format!("{e}")))?,
                "TELEMETRY_PATH" => self.telemetry_path = PathBuf::from(value),
                "RATE_LIMIT" => self.rate_limit_per_hour = value.parse().map_err(|e| bad(format!("{e}")))?,
                "SMART_INVOCATION" => self.smart_invocation = parse_bool(value).ok_or_else(|| bad(value.into()))?,
                "SHUFFLE_SEED" => self.shuffle_seed = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "BACKENDS" => self.backends = parse_backend_list(value).map_err(bad)?,
                _ => tracing::warn!(var = key, "ignoring unknown configuration variable"),
            }
        }
        Ok(())
    }
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn parse_backend_list(value: &str) -> Result<Vec<BackendConfig>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|item| !item.is_empty())
        .map(|item| {
            let (id, url) = item.split_once('=').ok_or_else(|| format!("expected model_id=url, got {item:?}"))?;
            let endpoint = url.parse().map_err(|e| format!("{url}: {e}"))?;
            Ok(BackendConfig::new(id, endpoint, Decoding::BeamWidth(1)))
        })
        .collect()
}
