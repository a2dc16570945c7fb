//! Sample-level feature extraction and the per-stream feature cache.

use std::path::{Path, PathBuf};

use crate::behavior::{eyes_feature, location_feature, mouth_feature};
use crate::error::{Error, Result};
use crate::formats::{read_sfft, write_sfft};
use crate::ingest::{crop_roi, load_frames, load_landmarks, validate_clip, ClipVerdict, DatasetManifest, FrameClip, LandmarkSequence, RoiKind, SampleEntry};
use crate::ippg::ippg_from_rois;
use crate::network::{NetworkConfig, Stream, StreamInputs};

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureConfig {
    pub streams: Vec<Stream>,
    pub t: usize,
    pub roi_size: usize,
    /// Minimum fraction of per-second probe frames with a detected face.
    pub min_valid_fraction: f64,
}

impl From<&NetworkConfig> for FeatureConfig {
    fn from(c: &NetworkConfig) -> Self {
        FeatureConfig {
            streams: c.streams.clone(),
            t: c.t,
            roi_size: c.roi_size,
            min_valid_fraction: crate::ingest::landmarks::DEFAULT_MIN_VALID_FRACTION,
        }
    }
}

/// Computes the configured streams of one clip.
pub fn extract_features(clip: &FrameClip, seq: &LandmarkSequence, cfg: &FeatureConfig) -> Result<StreamInputs> {
    let mut out = StreamInputs::new();
    for &s in &cfg.streams {
        let t = match s {
            Stream::Location => location_feature(seq, cfg.t)?,
            Stream::Eyes => eyes_feature(clip, seq, cfg.t, cfg.roi_size)?,
            Stream::Mouth => mouth_feature(clip, seq, cfg.t, cfg.roi_size)?,
            Stream::Ippg => {
                let nose = crop_roi(clip, seq, RoiKind::Nose, cfg.roi_size)?;
                let forehead = crop_roi(clip, seq, RoiKind::Forehead, cfg.roi_size)?;
                ippg_from_rois(&nose, &forehead)?.sequence
            }
        };
        out.insert(s, t);
    }
    Ok(out)
}

/// Loads, validates and extracts one manifest entry.
pub fn extract_entry(manifest: &DatasetManifest, entry: &SampleEntry, cfg: &FeatureConfig) -> Result<StreamInputs> {
    let seq = load_landmarks(&manifest.resolve(&entry.landmarks), entry.fps)?;
    if let ClipVerdict::Reject { .. } = validate_clip(&seq, cfg.min_valid_fraction) {
        return Err(Error::Data(format!(
            "sample {}: face found in too few frames ({:.2} valid)",
            entry.id,
            seq.valid_fraction()
        )));
    }
    let clip = load_frames(&manifest.resolve(&entry.frames), entry.fps)?;
    clip.check_duration()?;
    extract_features(&clip, &seq, cfg).map_err(|e| Error::Data(format!("sample {}: {e}", entry.id)))
}

pub fn cache_path(dir: &Path, id: &str, stream: Stream) -> PathBuf {
    dir.join(format!("{id}.{stream}.sfft"))
}

pub fn write_cache(dir: &Path, id: &str, inputs: &StreamInputs) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (s, t) in inputs {
        write_sfft(&cache_path(dir, id, *s), t)?;
    }
    Ok(())
}

pub fn read_cache(dir: &Path, id: &str, streams: &[Stream]) -> Result<StreamInputs> {
    streams
        .iter()
        .map(|&s| Ok((s, read_sfft(&cache_path(dir, id, s))?)))
        .collect()
}
