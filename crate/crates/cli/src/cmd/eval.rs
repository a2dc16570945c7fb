use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sffda_core::ingest::Label;
use sffda_core::metrics::{confusion, metrics, roc_auc, RocCurve};
use sffda_core::siamese::{infer, Sample};

use super::required;
use crate::config::{resolve, usage, write_resolved};
use crate::model::{ensure_out_dir, load_manifest, load_samples, Model};

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    /// Model directory written by `train`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<PathBuf>,
    /// train, test or all.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<String>,
    /// Decision threshold; the model's class-ratio threshold otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thr: Option<f64>,
    /// Where report.toml and roc.csv go; the model directory by default.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Resolved {
    pub model: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub split: String,
    pub thr: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for Resolved {
    fn default() -> Self {
        Resolved {
            model: None,
            manifest: None,
            features: None,
            split: "test".into(),
            thr: None,
            out: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub samples: usize,
    pub threshold: f64,
    /// Metrics with a zero denominator, reported as 0.
    pub undefined: Vec<String>,
    pub counts: Counts,
    pub metrics: MetricTable,
}

pub fn check_thr(thr: Option<f64>) -> Result<()> {
    match thr {
        Some(t) if !(0.0..=1.0).contains(&t) => Err(usage(format!("--thr must lie in [0, 1], got {t}"))),
        _ => Ok(()),
    }
}

pub fn probabilities(model: &Model, data: &[Sample]) -> Result<Vec<f64>> {
    data.par_iter()
        .map(|s| Ok(infer(&model.net, &model.params, &s.inputs)?.prob))
        .collect()
}

/// Scores `data` and builds the report and ROC curve.
pub fn evaluate(model: &Model, data: &[Sample], split: &str, thr: f64) -> Result<(EvalReport, RocCurve)> {
    let probs = probabilities(model, data)?;
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();
    let c = confusion(&labels, &probs, thr)?;
    let mt = metrics(&c);
    let (roc, auc) = roc_auc(&labels, &probs)?;
    let report = EvalReport {
        split: split.to_string(),
        samples: data.len(),
        threshold: thr,
        undefined: mt.undefined.clone(),
        counts: Counts { tp: c.tp, tn: c.tn, fp: c.fp, fn_: c.fn_ },
        metrics: MetricTable {
            precision: mt.precision,
            sensitivity: mt.sensitivity,
            specificity: mt.specificity,
            accuracy: mt.accuracy,
            f1: mt.f1,
            auc,
        },
    };
    Ok((report, roc))
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    check_thr(r.thr)?;
    let model_dir = required(&r.model, "model")?;
    let model = Model::load(&model_dir)?;
    let m = load_manifest(&required(&r.manifest, "manifest")?)?;
    let ids = model.ids(&r.split)?;
    let data = load_samples(&m, &ids, &model.meta.network, r.features.as_deref())?;
    let thr = r.thr.unwrap_or(model.meta.threshold);
    let (report, roc) = evaluate(&model, &data, &r.split, thr)?;
    let dir = ensure_out_dir(&r.out.clone().unwrap_or(model_dir))?;
    let text = toml::to_string(&report)?;
    fs::write(dir.join("report.toml"), &text)?;
    fs::write(dir.join("roc.csv"), roc.to_csv())?;
    write_resolved(&dir, "eval", &r)?;
    print!("{text}");
    Ok(())
}
