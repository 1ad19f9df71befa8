//! Defaults loaded from `--config`, overridden by the environment and then
//! by flags.

use std::path::Path;

use anyhow::{bail, Context};
use serde::Deserialize;

pub const STATE_LIMIT_ENV: &str = "RTFORGE_STATE_LIMIT";

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub state_limit: Option<usize>,
    pub quantum: Option<i64>,
    pub jobs: Option<usize>,
    pub grid_cap: Option<usize>,
    pub imitator_version: Option<String>,
    /// Time4sys mapping file, relative to the working directory.
    pub mapping: Option<String>,
}

impl FileConfig {
    /// TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
            .with_context(|| format!("bad configuration in {}", path.display()))
    }

    pub fn parse(text: &str, json: bool) -> anyhow::Result<Self> {
        Ok(if json { serde_json::from_str(text)? } else { toml::from_str(text)? })
    }
}

/// Flag, then environment, then config file, then `default`.
pub fn state_limit(flag: Option<usize>, env: Option<&str>, file: &FileConfig, default: usize) -> anyhow::Result<usize> {
    if let Some(n) = flag {
        return Ok(n);
    }
    if let Some(text) = env {
        match text.trim().parse() {
            Ok(n) => return Ok(n),
            Err(_) => bail!("{STATE_LIMIT_ENV}={text:?} is not a state count"),
        }
    }
    Ok(file.state_limit.unwrap_or(default))
}
