//! Server configuration: defaults, an optional TOML file, then
//! `HISTWHOIS_*` environment overrides.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::protocol::Limits;

pub const DEFAULT_PORT: u16 = 4343;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub snapshot: Option<PathBuf>,
    pub contact: String,
    pub max_line_len: usize,
    pub max_bulk_lines: u64,
    pub idle_timeout_secs: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        let limits = Limits::default();
        ServerConfig {
            listen: SocketAddr::from(([0, 0, 0, 0], DEFAULT_PORT)),
            snapshot: None,
            contact: "contact@example.net".into(),
            max_line_len: limits.max_line_len,
            max_bulk_lines: limits.max_bulk_lines,
            idle_timeout_secs: 300,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("parsing {0}: {1}")]
    Parse(PathBuf, toml::de::Error),
    #[error("environment variable {0}: invalid value {1:?}")]
    Env(&'static str, String),
}

impl ServerConfig {
    pub fn from_file(path: &Path) -> Result<ServerConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.into(), e))?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse(path.into(), e))
    }

    /// Applies overrides from a variable lookup (normally `std::env::var`).
    pub fn apply_env<F>(&mut self, get: F) -> Result<(), ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        fn parsed<T: std::str::FromStr>(name: &'static str, v: String) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::Env(name, v))
        }
        if let Some(v) = get("HISTWHOIS_LISTEN") {
            self.listen = parsed("HISTWHOIS_LISTEN", v)?;
        }
        if let Some(v) = get("HISTWHOIS_SNAPSHOT") {
            self.snapshot = Some(PathBuf::from(v));
        }
        if let Some(v) = get("HISTWHOIS_CONTACT") {
            self.contact = v;
        }
        if let Some(v) = get("HISTWHOIS_MAX_LINE_LEN") {
            self.max_line_len = parsed("HISTWHOIS_MAX_LINE_LEN", v)?;
        }
        if let Some(v) = get("HISTWHOIS_MAX_BULK_LINES") {
            self.max_bulk_lines = parsed("HISTWHOIS_MAX_BULK_LINES", v)?;
        }
        if let Some(v) = get("HISTWHOIS_IDLE_TIMEOUT_SECS") {
            self.idle_timeout_secs = parsed("HISTWHOIS_IDLE_TIMEOUT_SECS", v)?;
        }
        Ok(())
    }

    pub fn limits(&self) -> Limits {
        Limits {
            max_line_len: self.max_line_len,
            max_bulk_lines: self.max_bulk_lines,
        }
    }

    pub fn idle_timeout(&self) -> Duration {
        Duration::from_secs(self.idle_timeout_secs)
    }
}
