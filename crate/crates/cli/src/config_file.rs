//! Flat `key = value` configuration with dotted keys.
//!
//! ```text
//! # comments and blank lines are ignored
//! epsilon = 1.5
//! sampler.eta = 2
//! partition.enabled = false
//! ```

use std::path::Path;

use redpoctor::PipelineConfig;

use crate::error::CliError;

pub const SEED_ENV: &str = "REDPOCTOR_SEED";

pub fn parse_config_text(
    text: &str,
    config: &mut PipelineConfig,
    path: &Path,
) -> Result<(), CliError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CliError::ConfigFile {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        config
            .set(key.trim(), value.trim())
            .map_err(|e| err(e.to_string()))?;
    }
    Ok(())
}

/// Parses a `--set key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                CliError::Usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))
            })
        }
        Err(_) => Ok(None),
    }
}

/// Resolves a configuration. Later sources win: defaults, `REDPOCTOR_SEED`,
/// the config file, `--set` overrides, then an explicit seed.
pub fn resolve_config(
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<PipelineConfig, CliError> {
    let mut config = PipelineConfig::default();
    if let Some(s) = env_seed()? {
        config.seed = s;
    }
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        parse_config_text(&text, &mut config, path)?;
    }
    for o in overrides {
        let (k, v) = parse_override(o)?;
        config.set(&k, &v)?;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

/// Renders a configuration in the file format, one key per line.
pub fn render_config(config: &PipelineConfig) -> String {
    config
        .entries()
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}
