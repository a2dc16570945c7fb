//! Network presets, sample loading and the on-disk model directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sffda_core::features::{extract_entry, read_cache, FeatureConfig};
use sffda_core::formats::{read_sffw, write_sffw};
use sffda_core::ingest::DatasetManifest;
use sffda_core::network::{parse_streams, NetworkConfig, SffNetwork};
use sffda_core::optim::AdamState;
use sffda_core::params::ParamStore;
use sffda_core::siamese::{EpochRecord, Sample};

use crate::config::usage;

pub const CHECKPOINT: &str = "checkpoint.sffw";
pub const OPTIMIZER: &str = "optimizer.sffw";
pub const HISTORY: &str = "history.csv";
pub const META: &str = "model.toml";
pub const FEATURE_INDEX: &str = "features.toml";

/// `preset` is `default` or `miniature`; `t` and `roi_size` override it.
pub fn network_config(preset: &str, streams: &str, t: Option<usize>, roi_size: Option<usize>) -> Result<NetworkConfig> {
    let mut c = match preset {
        "default" => NetworkConfig::default(),
        "miniature" => NetworkConfig::miniature(),
        other => return Err(usage(format!("unknown preset {other:?} (expected default or miniature)"))),
    };
    c.streams = parse_streams(streams).map_err(|e| usage(e.to_string()))?;
    if let Some(t) = t {
        c.t = t;
    }
    if let Some(r) = roi_size {
        c.roi_size = r;
    }
    c.validate().map_err(|e| usage(e.to_string()))?;
    Ok(c)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    if !path.is_file() {
        return Err(usage(format!("manifest {} does not exist", path.display())));
    }
    Ok(DatasetManifest::load(path)?)
}

/// What an `extract` run wrote, stored next to the cache files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureIndex {
    pub t: usize,
    pub roi_size: usize,
    pub streams: Vec<sffda_core::network::Stream>,
    pub ids: Vec<String>,
}

/// Features of `ids` from the cache in `features`, or extracted from the
/// manifest's files when no cache is given. Order follows `ids`.
pub fn load_samples(m: &DatasetManifest, ids: &[String], net: &NetworkConfig, features: Option<&Path>) -> Result<Vec<Sample>> {
    let entries = ids
        .iter()
        .map(|id| m.get(id).ok_or_else(|| usage(format!("sample {id:?} is not in the manifest"))))
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = features {
        let idx_path = dir.join(FEATURE_INDEX);
        let text = fs::read_to_string(&idx_path).map_err(|e| usage(format!("{}: {e}", idx_path.display())))?;
        let idx: FeatureIndex = toml::from_str(&text).with_context(|| format!("parsing {}", idx_path.display()))?;
        if idx.t != net.t || idx.roi_size != net.roi_size || !net.streams.iter().all(|s| idx.streams.contains(s)) {
            return Err(usage(format!(
                "feature cache {} (t {}, roi {}, streams {:?}) does not match the network (t {}, roi {}, streams {:?})",
                dir.display(),
                idx.t,
                idx.roi_size,
                idx.streams,
                net.t,
                net.roi_size,
                net.streams
            )));
        }
    }
    let fc = FeatureConfig::from(net);
    entries
        .par_iter()
        .map(|e| {
            let inputs = match features {
                Some(dir) => read_cache(dir, &e.id, &net.streams)?,
                None => extract_entry(m, e, &fc)?,
            };
            Ok(Sample {
                id: e.id.clone(),
                label: e.label,
                inputs,
            })
        })
        .collect()
}

/// `model.toml`: everything besides the weights needed to reuse a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub network: NetworkConfig,
    pub threshold: f64,
    pub epochs_done: usize,
    pub seed: u64,
    pub imbalance: String,
    pub split_ratio: f64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub references: Vec<String>,
}

pub struct Model {
    pub meta: ModelMeta,
    pub net: SffNetwork,
    pub params: ParamStore,
}

impl Model {
    pub fn load(dir: &Path) -> Result<Model> {
        let meta_path = dir.join(META);
        if !meta_path.is_file() {
            return Err(usage(format!("{} is not a model directory (no {META})", dir.display())));
        }
        let meta: ModelMeta = toml::from_str(&fs::read_to_string(&meta_path)?)
            .with_context(|| format!("parsing {}", meta_path.display()))?;
        let net = SffNetwork::new(meta.network.clone())?;
        let params = read_sffw(&dir.join(CHECKPOINT))?;
        Ok(Model { meta, net, params })
    }

    pub fn ids(&self, split: &str) -> Result<Vec<String>> {
        Ok(match split {
            "train" => self.meta.train_ids.clone(),
            "test" => self.meta.test_ids.clone(),
            "all" => self.meta.train_ids.iter().chain(&self.meta.test_ids).cloned().collect(),
            other => return Err(usage(format!("unknown split {other:?} (expected train, test or all)"))),
        })
    }

    pub fn save(&self, dir: &Path, opt: &AdamState) -> Result<()> {
        write_sffw(&dir.join(CHECKPOINT), &self.params)?;
        write_sffw(&dir.join(OPTIMIZER), &opt.to_store())?;
        fs::write(dir.join(META), toml::to_string(&self.meta)?)?;
        Ok(())
    }
}

pub fn history_csv(records: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,loss,loss1,loss2,train_accuracy\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.loss, r.loss1, r.loss2, r.train_accuracy));
    }
    s
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            bail!("{}:{}: expected 5 fields", path.display(), i + 1);
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse().with_context(|| format!("{}:{}: bad number {:?}", path.display(), i + 1, f[k]))
        };
        out.push(EpochRecord {
            epoch: f[0].parse().with_context(|| format!("{}:{}: bad epoch", path.display(), i + 1))?,
            loss: num(1)?,
            loss1: num(2)?,
            loss2: num(3)?,
            train_accuracy: num(4)?,
        });
    }
    Ok(out)
}

/// Creates `dir` if its parent exists.
pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf> {
    if !dir.is_dir() {
        let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(usage(format!("output directory {} has no existing parent", dir.display())));
        }
        fs::create_dir(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trips() {
        let h = vec![
            EpochRecord { epoch: 1, loss: 0.7, loss1: 0.25, loss2: 0.693, train_accuracy: 0.5 },
            EpochRecord { epoch: 2, loss: 1e-17, loss1: 0.0, loss2: 2.0 / 3.0, train_accuracy: 1.0 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(HISTORY);
        fs::write(&p, history_csv(&h)).unwrap();
        assert_eq!(read_history(&p).unwrap(), h);
    }

    #[test]
    fn presets_and_overrides() {
        let c = network_config("miniature", "loc,eyes,mouth", Some(8), None).unwrap();
        assert_eq!((c.t, c.roi_size, c.fusion_dim()), (8, 8, 3 * 32));
        assert!(network_config("miniature", "eyes", Some(6), None).is_err());
        assert!(network_config("huge", "eyes", None, None).is_err());
        assert!(network_config("default", "nose", None, None).is_err());
    }
}
