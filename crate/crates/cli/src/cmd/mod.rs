pub mod eval;
pub mod extract;
pub mod report;
pub mod screen;
pub mod synth;
pub mod train;

use std::path::PathBuf;

use anyhow::Result;

use crate::config::usage;

pub fn required(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| usage(format!("missing --{flag}")))
}
