use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sffda_core::siamese::{screen, ReferenceSet};

use super::eval::check_thr;
use super::required;
use crate::config::{resolve, usage, write_resolved};
use crate::model::{ensure_out_dir, load_manifest, load_samples, Model};

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    /// Sample id from the manifest.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thr: Option<f64>,
    /// Directory for `screen-<id>.toml`; the model directory by default.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Resolved {
    pub model: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub id: Option<String>,
    pub features: Option<PathBuf>,
    pub thr: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Verdict<'a> {
    id: &'a str,
    label: String,
    prob: f64,
    dissimilarity: f64,
    threshold: f64,
    references: &'a [String],
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    check_thr(r.thr)?;
    let id = r.id.clone().ok_or_else(|| usage("missing --id"))?;
    let model_dir = required(&r.model, "model")?;
    let model = Model::load(&model_dir)?;
    let m = load_manifest(&required(&r.manifest, "manifest")?)?;
    if m.get(&id).is_none() {
        return Err(usage(format!("unknown sample id {id:?}")));
    }
    let net = &model.meta.network;
    let target = load_samples(&m, std::slice::from_ref(&id), net, r.features.as_deref())?.remove(0);
    let ref_samples = load_samples(&m, &model.meta.references, net, r.features.as_deref())?;
    let refs = ReferenceSet::from_samples(&model.net, &model.params, &ref_samples.iter().collect::<Vec<_>>())?;
    let thr = r.thr.unwrap_or(model.meta.threshold);
    let res = screen(&model.net, &model.params, &target.inputs, &refs, thr)?;
    let text = toml::to_string(&Verdict {
        id: &id,
        label: res.label.to_string(),
        prob: res.prob,
        dissimilarity: res.dissimilarity,
        threshold: res.threshold,
        references: &refs.ids,
    })?;
    let dir = ensure_out_dir(&r.out.clone().unwrap_or(model_dir))?;
    fs::write(dir.join(format!("screen-{id}.toml")), &text)?;
    write_resolved(&dir, "screen", &r)?;
    print!("{text}");
    Ok(())
}
