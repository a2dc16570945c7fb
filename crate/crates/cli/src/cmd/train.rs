use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sffda_core::formats::read_sffw;
use sffda_core::ingest::{balance_classes, manifest_threshold, split};
use sffda_core::network::SffNetwork;
use sffda_core::optim::{AdamConfig, AdamState};
use sffda_core::siamese::{train, LossWeights, ReferenceSet, TrainConfig, DEFAULT_M_PRIME};

use super::required;
use crate::config::{resolve, usage, write_resolved};
use crate::model::{
    ensure_out_dir, history_csv, load_manifest, load_samples, network_config, read_history, Model, ModelMeta, HISTORY,
    OPTIMIZER,
};

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    /// Model directory: checkpoint, optimizer state, history and metadata.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    /// Feature cache written by `extract`; features are computed on the fly otherwise.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<PathBuf>,
    /// Comma-separated subset of loc, eyes, mouth, ippg.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    streams: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    roi_size: Option<usize>,
    /// Epochs to run (added to the existing count with --resume).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    lr: Option<f64>,
    /// Weight of the similarity loss.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    /// Weight of the classification loss.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Size of the anxiety-free reference set used by `screen`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    m_prime: Option<usize>,
    /// `balance` undersamples the majority class; `threshold` keeps every
    /// sample. Either way the threshold is minority / total of the kept data.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    imbalance: Option<String>,
    /// Fraction of each class used for training.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    split_ratio: Option<f64>,
    /// Continue the run stored in --out.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    resume: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Resolved {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub streams: String,
    pub preset: String,
    pub t: Option<usize>,
    pub roi_size: Option<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub m_prime: usize,
    pub imbalance: String,
    pub split_ratio: f64,
    pub resume: bool,
}

impl Default for Resolved {
    fn default() -> Self {
        let t = TrainConfig::default();
        Resolved {
            manifest: None,
            out: None,
            features: None,
            streams: "location,eyes,mouth,ippg".into(),
            preset: "default".into(),
            t: None,
            roi_size: None,
            epochs: t.epochs,
            lr: t.adam.lr,
            alpha: t.weights.alpha,
            beta: t.weights.beta,
            seed: 0,
            m_prime: DEFAULT_M_PRIME,
            imbalance: "balance".into(),
            split_ratio: 0.8,
            resume: false,
        }
    }
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    let m = load_manifest(&required(&r.manifest, "manifest")?)?;
    let out = required(&r.out, "out")?;
    let net_cfg = network_config(&r.preset, &r.streams, r.t, r.roi_size)?;
    let weights = LossWeights { alpha: r.alpha, beta: r.beta };
    weights.validate().map_err(|e| usage(e.to_string()))?;
    if !(r.lr > 0.0) || r.m_prime == 0 {
        return Err(usage("--lr and --m-prime must be positive"));
    }

    let (mut model, mut opt, mut history) = if r.resume {
        let model = Model::load(&out)?;
        if model.meta.network != net_cfg {
            return Err(usage("--resume needs the network settings of the stored run"));
        }
        let mut opt = AdamState::from_store(&read_sffw(&out.join(OPTIMIZER))?, &model.params)?;
        opt.config.lr = r.lr;
        let history = read_history(&out.join(HISTORY))?;
        (model, opt, history)
    } else {
        let source = match r.imbalance.as_str() {
            "balance" => balance_classes(&m, r.seed)?,
            "threshold" => m.clone(),
            other => return Err(usage(format!("unknown --imbalance {other:?} (expected balance or threshold)"))),
        };
        let (tr, te) = split(&source, r.split_ratio, r.seed).map_err(|e| usage(e.to_string()))?;
        let net = SffNetwork::new(net_cfg.clone())?;
        let params = net.init_params(r.seed);
        let opt = AdamState::new(AdamConfig { lr: r.lr, ..AdamConfig::default() }, &params);
        let meta = ModelMeta {
            network: net_cfg,
            threshold: manifest_threshold(&source),
            epochs_done: 0,
            seed: r.seed,
            imbalance: r.imbalance.clone(),
            split_ratio: r.split_ratio,
            train_ids: tr.samples.iter().map(|s| s.id.clone()).collect(),
            test_ids: te.samples.iter().map(|s| s.id.clone()).collect(),
            references: Vec::new(),
        };
        (Model { meta, net, params }, opt, Vec::new())
    };
    let dir = ensure_out_dir(&out)?;
    let data = load_samples(&m, &model.meta.train_ids, &model.meta.network, r.features.as_deref())?;

    let cfg = TrainConfig {
        epochs: r.epochs,
        adam: opt.config,
        weights,
        seed: model.meta.seed,
        epoch_size: None,
        threshold: model.meta.threshold,
    };
    let first = model.meta.epochs_done + 1;
    let last = model.meta.epochs_done + r.epochs;
    println!(
        "training on {} samples, threshold {:.4}, epochs {first}..={last}",
        data.len(),
        model.meta.threshold
    );
    let recs = train(&model.net, &mut model.params, &mut opt, &data, &cfg, first, |e| {
        println!(
            "epoch {:>4}/{last}  Loss {:.6}  Loss1 {:.6}  Loss2 {:.6}  train_acc {:.4}",
            e.epoch, e.loss, e.loss1, e.loss2, e.train_accuracy
        );
    })?;
    history.extend(recs);
    model.meta.epochs_done = last;
    let refs = ReferenceSet::select(&model.net, &model.params, &data, r.m_prime)?;
    model.meta.references = refs.ids;
    model.save(&dir, &opt)?;
    fs::write(dir.join(HISTORY), history_csv(&history)).context("writing history")?;
    write_resolved(&dir, "train", &r)?;
    println!("saved model to {}", dir.display());
    Ok(())
}
