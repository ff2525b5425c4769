use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::ExpansionPolicy;
use crate::testlang::Clock;

pub const DATA_DIR_ENV: &str = "SEMTRACE_DATA_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot create data directory {path}: {source}")]
    DataDir { path: PathBuf, source: std::io::Error },
}

/// ```toml
/// data_dir = "data"
/// ontology = "railway.ont"   # optional, the bundled ontology otherwise
/// host = "127.0.0.1"
/// port = 8080
/// expansion_policy = "equivalents-only"
/// facets = ["kind", "result"]
///
/// [clock]
/// start = 0
/// stride = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub ontology: Option<PathBuf>,
    pub host: String,
    pub port: u16,
    pub expansion_policy: ExpansionPolicy,
    pub clock: Clock,
    pub facets: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("semtrace-data"),
            ontology: None,
            host: "127.0.0.1".into(),
            port: 8080,
            expansion_policy: ExpansionPolicy::EquivalentsOnly,
            clock: Clock::default(),
            facets: vec!["kind".into(), "result".into()],
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` if given, then applies `SEMTRACE_DATA_DIR`. Relative
    /// paths inside the file are resolved against the file's directory.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                let mut c = Self::from_toml(&text)?;
                let base = p.parent().unwrap_or(Path::new(""));
                c.data_dir = base.join(&c.data_dir);
                c.ontology = c.ontology.map(|o| base.join(o));
                c
            }
            None => Self::default(),
        };
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            config.data_dir = PathBuf::from(dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.port == 0 {
            return Err(ConfigError::Invalid("port must be in 1..=65535".into()));
        }
        if self.host.trim().is_empty() {
            return Err(ConfigError::Invalid("host is empty".into()));
        }
        if let Some(o) = &self.ontology {
            if !o.is_file() {
                return Err(ConfigError::Invalid(format!(
                    "ontology file {} does not exist",
                    o.display()
                )));
            }
        }
        Ok(())
    }

    pub fn ensure_data_dir(&self) -> Result<(), ConfigError> {
        std::fs::create_dir_all(&self.data_dir).map_err(|source| ConfigError::DataDir {
            path: self.data_dir.clone(),
            source,
        })
    }

    pub fn bind_address(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }
}
