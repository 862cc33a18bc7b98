//! TOML experiment configs.
//!
//! A config is an [`ExperimentSpec`] written as TOML plus a required
//! top-level `schema_version`. Omitted keys take their documented defaults;
//! unknown keys and duplicate keys are errors. Every error names the
//! offending key by its dotted path, e.g. `env.kappa` or `agents[1].epsilon`.

use std::path::{Path, PathBuf};

use crate::harness::experiment::ExperimentSpec;

pub const CONFIG_SCHEMA_VERSION: i64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid TOML: {0}")]
    Syntax(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigFileError {
    /// Dotted path of the offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigFileError::Missing(key) => Some(key),
            ConfigFileError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentSpec, ConfigFileError> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigFileError::Syntax(e.message().to_string()))?;
    match table.remove("schema_version") {
        None => return Err(ConfigFileError::Missing("schema_version")),
        Some(toml::Value::Integer(CONFIG_SCHEMA_VERSION)) => {}
        Some(other) => {
            return Err(ConfigFileError::Invalid {
                key: "schema_version".into(),
                message: format!("{other} is not supported (this build reads version {CONFIG_SCHEMA_VERSION})"),
            })
        }
    }
    let spec: ExperimentSpec = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        ConfigFileError::Invalid {
            key,
            message: inner.message().to_string(),
        }
    })?;
    spec.validate().map_err(|e| ConfigFileError::Invalid {
        key: e.key,
        message: e.message,
    })?;
    Ok(spec)
}

pub fn parse_config(path: &Path) -> Result<ExperimentSpec, ConfigFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}
