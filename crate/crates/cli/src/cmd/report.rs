use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sffda_core::siamese::{permutation_importance, EpochRecord};

use super::eval::{check_thr, evaluate, EvalReport};
use super::required;
use crate::config::{resolve, usage, write_resolved};
use crate::model::{ensure_out_dir, load_manifest, load_samples, read_history, Model, HISTORY};

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    thr: Option<f64>,
    /// Shuffles per stream for the importance scores.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    permutations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Directory for summary.toml; the model directory by default.
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
    pub permutations: usize,
    pub seed: u64,
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
            permutations: 10,
            seed: 0,
            out: None,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    epochs: usize,
    final_loss: f64,
    final_loss1: f64,
    final_loss2: f64,
    final_train_accuracy: f64,
    evaluation: EvalReport,
    /// Mean accuracy drop when the stream is shuffled across samples.
    importance: BTreeMap<String, f64>,
    history: Vec<EpochRecord>,
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    check_thr(r.thr)?;
    if r.permutations == 0 {
        return Err(usage("--permutations must be positive"));
    }
    let model_dir = required(&r.model, "model")?;
    let model = Model::load(&model_dir)?;
    let history = read_history(&model_dir.join(HISTORY))?;
    let last = *history.last().ok_or_else(|| usage("model has an empty history"))?;
    let m = load_manifest(&required(&r.manifest, "manifest")?)?;
    let data = load_samples(&m, &model.ids(&r.split)?, &model.meta.network, r.features.as_deref())?;
    let thr = r.thr.unwrap_or(model.meta.threshold);
    let (evaluation, _) = evaluate(&model, &data, &r.split, thr)?;
    let by_stream = permutation_importance(&model.net, &model.params, &data, thr, r.seed, r.permutations)?;

    println!("epochs {}  final Loss {:.6}  Loss1 {:.6}  Loss2 {:.6}", last.epoch, last.loss, last.loss1, last.loss2);
    let mt = &evaluation.metrics;
    println!(
        "{} split ({} samples, thr {:.4}): Pre {:.4}  Sen {:.4}  Spe {:.4}  Acc {:.4}  F1 {:.4}  AUC {:.4}",
        evaluation.split, evaluation.samples, thr, mt.precision, mt.sensitivity, mt.specificity, mt.accuracy, mt.f1, mt.auc
    );
    for (s, v) in &by_stream {
        println!("importance {:<8} {v:+.4}", s.name());
    }
    let importance = by_stream.into_iter().map(|(s, v)| (s.to_string(), v)).collect();
    let summary = Summary {
        epochs: last.epoch,
        final_loss: last.loss,
        final_loss1: last.loss1,
        final_loss2: last.loss2,
        final_train_accuracy: last.train_accuracy,
        evaluation,
        importance,
        history,
    };
    let dir = ensure_out_dir(&r.out.clone().unwrap_or(model_dir))?;
    fs::write(dir.join("summary.toml"), toml::to_string(&summary)?)?;
    write_resolved(&dir, "report", &r)?;
    Ok(())
}
