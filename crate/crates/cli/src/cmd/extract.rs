use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sffda_core::features::write_cache;

use super::required;
use crate::config::{resolve, write_resolved};
use crate::model::{ensure_out_dir, load_manifest, load_samples, network_config, FeatureIndex, FEATURE_INDEX};

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    /// Cache directory for `<id>.<stream>.sfft` files.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    /// Comma-separated subset of loc, eyes, mouth, ippg.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    streams: Option<String>,
    /// Network preset fixing T and crop size: default or miniature.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_size: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Resolved {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub streams: String,
    pub preset: String,
    pub t: Option<usize>,
    pub roi_size: Option<usize>,
}

impl Default for Resolved {
    fn default() -> Self {
        Resolved {
            manifest: None,
            out: None,
            streams: "location,eyes,mouth,ippg".into(),
            preset: "default".into(),
            t: None,
            roi_size: None,
        }
    }
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    let m = load_manifest(&required(&r.manifest, "manifest")?)?;
    let out = required(&r.out, "out")?;
    let net = network_config(&r.preset, &r.streams, r.t, r.roi_size)?;
    let dir = ensure_out_dir(&out)?;
    let ids: Vec<String> = m.samples.iter().map(|s| s.id.clone()).collect();
    let samples = load_samples(&m, &ids, &net, None)?;
    samples
        .par_iter()
        .try_for_each(|s| write_cache(&dir, &s.id, &s.inputs))?;
    let index = FeatureIndex {
        t: net.t,
        roi_size: net.roi_size,
        streams: net.streams.clone(),
        ids,
    };
    fs::write(dir.join(FEATURE_INDEX), toml::to_string(&index)?)?;
    write_resolved(&dir, "extract", &r)?;
    println!("cached {} streams for {} samples in {}", net.streams.len(), samples.len(), dir.display());
    Ok(())
}
