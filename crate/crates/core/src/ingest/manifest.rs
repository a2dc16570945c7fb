//! Dataset manifests, random undersampling and stratified splitting.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "anxiety-free")]
    AnxietyFree,
    #[serde(rename = "anxiety")]
    Anxiety,
}

impl Label {
    /// 1 for anxiety (the positive class), 0 otherwise.
    pub fn as_target(self) -> f64 {
        match self {
            Label::AnxietyFree => 0.0,
            Label::Anxiety => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Anxiety
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::AnxietyFree => "anxiety-free",
            Label::Anxiety => "anxiety",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub id: String,
    /// Relative paths resolve against the manifest's directory.
    pub landmarks: PathBuf,
    pub frames: PathBuf,
    pub label: Label,
    pub fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    #[serde(default = "manifest_version")]
    pub version: u32,
    #[serde(default, rename = "sample")]
    pub samples: Vec<SampleEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn manifest_version() -> u32 {
    1
}

impl DatasetManifest {
    pub fn new(samples: Vec<SampleEntry>) -> Result<Self> {
        let m = DatasetManifest {
            version: 1,
            samples,
            base_dir: PathBuf::new(),
        };
        m.check_ids()?;
        Ok(m)
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::Data(format!("duplicate sample id {:?}", s.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn get(&self, id: &str) -> Option<&SampleEntry> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn with_samples(&self, samples: Vec<SampleEntry>) -> DatasetManifest {
        DatasetManifest {
            version: self.version,
            samples,
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn subset(&self, ids: &[String]) -> Result<DatasetManifest> {
        let samples = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::Data(format!("unknown sample id {id:?}")))
            })
            .collect::<Result<_>>()?;
        Ok(self.with_samples(samples))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("manifest: {e}")))
    }

    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m: DatasetManifest =
            toml::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        m.base_dir = base_dir.to_path_buf();
        m.check_ids()?;
        Ok(m)
    }

    /// Loads and checks that every referenced file exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let m = Self::from_toml(&text, &base)?;
        for s in &m.samples {
            for p in [&s.landmarks, &s.frames] {
                let full = m.resolve(p);
                if !full.exists() {
                    return Err(Error::Data(format!(
                        "sample {}: missing file {}",
                        s.id,
                        full.display()
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }
}

/// Minority / (minority + majority).
pub fn imbalance_threshold(minority: usize, majority: usize) -> f64 {
    minority as f64 / (minority + majority) as f64
}

/// Class-ratio threshold of a manifest (0.5 when balanced).
pub fn manifest_threshold(m: &DatasetManifest) -> f64 {
    let (a, b) = (m.count(Label::Anxiety), m.count(Label::AnxietyFree));
    imbalance_threshold(a.min(b), a.max(b))
}

/// Randomly drops majority-class samples until both classes have the
/// minority count. Surviving samples keep their manifest order.
pub fn balance_classes(m: &DatasetManifest, seed: u64) -> Result<DatasetManifest> {
    let (pos, neg) = (m.count(Label::Anxiety), m.count(Label::AnxietyFree));
    if pos == 0 || neg == 0 {
        return Err(Error::Data("balancing needs both classes present".into()));
    }
    if pos == neg {
        return Ok(m.clone());
    }
    let majority = if pos > neg { Label::Anxiety } else { Label::AnxietyFree };
    let keep_n = pos.min(neg);
    let mut maj: Vec<usize> = m
        .samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.label == majority)
        .map(|(i, _)| i)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    maj.shuffle(&mut rng);
    let kept: HashSet<usize> = maj[..keep_n].iter().copied().collect();
    let samples = m
        .samples
        .iter()
        .enumerate()
        .filter(|(i, s)| s.label != majority || kept.contains(i))
        .map(|(_, s)| s.clone())
        .collect();
    Ok(m.with_samples(samples))
}

/// Stratified split. Each class contributes `round(n_c * ratio)` samples to
/// train (kept within `1..n_c`); the rest go to test. Returned manifests
/// keep manifest order and carry their `split` tag.
pub fn split(m: &DatasetManifest, ratio: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; m.len()];
    for label in [Label::AnxietyFree, Label::Anxiety] {
        let mut idx: Vec<usize> = (0..m.len()).filter(|&i| m.samples[i].label == label).collect();
        if idx.len() < 2 {
            return Err(Error::Data(format!(
                "class {label} has {} samples, splitting needs at least 2",
                idx.len()
            )));
        }
        let n_train = ((idx.len() as f64 * ratio).round() as usize).clamp(1, idx.len() - 1);
        idx.shuffle(&mut rng);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let tagged = |want: bool, tag: Split| {
        m.samples
            .iter()
            .zip(&in_train)
            .filter(|(_, &t)| t == want)
            .map(|(s, _)| SampleEntry {
                split: Some(tag),
                ..s.clone()
            })
            .collect::<Vec<_>>()
    };
    Ok((
        m.with_samples(tagged(true, Split::Train)),
        m.with_samples(tagged(false, Split::Test)),
    ))
}
