//! Shared helpers for the `bench` and `eval` binaries.

use std::path::Path;

use anyhow::Context;
use compleval_core::analysis::FailureThresholds;
use compleval_core::gateway::BackendConfig;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct BackendsFile {
    #[serde(default)]
    backends: Vec<BackendConfig>,
}

/// Reads the `[[backends]]` tables of a TOML file. Other keys are ignored, so a service
/// configuration file works as well.
pub fn load_backends(path: &Path) -> anyhow::Result<Vec<BackendConfig>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: BackendsFile = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    anyhow::ensure!(!file.backends.is_empty(), "{} declares no [[backends]]", path.display());
    Ok(file.backends)
}

/// Failure-heuristic thresholds from a TOML file, or the defaults.
pub fn load_thresholds(path: Option<&Path>) -> anyhow::Result<FailureThresholds> {
    let Some(path) = path else { return Ok(FailureThresholds::default()) };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backends_from_service_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "rate_limit_per_hour = 5\n[[backends]]\nmodel_id = \"m\"\nendpoint = \"mock://empty\"\ndecoding = { beam_width = 1 }\n",
        )
        .unwrap();
        assert_eq!(load_backends(&path).unwrap()[0].model_id, "m");
        std::fs::write(&path, "rate_limit_per_hour = 5\n").unwrap();
        assert!(load_backends(&path).is_err());
    }

    #[test]
    fn thresholds_partial_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, "repeat_count = 4\n").unwrap();
        let t = load_thresholds(Some(&path)).unwrap();
        assert_eq!(t.repeat_count, 4);
        assert_eq!(t.copy_min_chars, 10);
        assert_eq!(load_thresholds(None).unwrap(), FailureThresholds::default());
    }
}
