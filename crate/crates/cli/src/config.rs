//! Flag > `--config` file > defaults resolution and resolved-config output.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Marks an error as a usage or configuration problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Overlays the set flags onto the config file and deserializes the result.
/// `R` supplies defaults for anything neither source sets.
pub fn resolve<F: Serialize, R: DeserializeOwned>(flags: &F, config: Option<&Path>) -> Result<R> {
    let mut table = match config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let set = toml::Table::try_from(flags).context("serializing flags")?;
    for (k, v) in set {
        table.insert(k, v);
    }
    table.try_into().map_err(|e| usage(format!("configuration: {e}")))
}

/// Writes `<cmd>.resolved.toml` into `dir`.
pub fn write_resolved<R: Serialize>(dir: &Path, cmd: &str, resolved: &R) -> Result<()> {
    let text = toml::to_string(resolved).context("serializing resolved config")?;
    let path = dir.join(format!("{cmd}.resolved.toml"));
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

/// Caps rayon's pool from `SFFDA_THREADS`.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("SFFDA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| usage(format!("SFFDA_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring thread pool")
}
