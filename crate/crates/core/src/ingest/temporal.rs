//! Fixed-length temporal resampling.

use super::frames::RoiClip;
use crate::error::{Error, Result};

pub const DEFAULT_T: usize = 64;

/// `round(i * (m - 1) / (t - 1))` for `i` in `0..t`: non-decreasing, first
/// index 0, last index `m - 1`.
pub fn uniform_indices(m: usize, t: usize) -> Vec<usize> {
    assert!(m > 0 && t > 0, "uniform_indices needs m, t >= 1");
    if t == 1 {
        return vec![0];
    }
    (0..t)
        .map(|i| ((i * (m - 1)) as f64 / (t - 1) as f64).round() as usize)
        .collect()
}

/// Nearest valid frame to `i`; ties go to the earlier frame.
pub fn nearest_valid(valid: &[bool], i: usize) -> Option<usize> {
    if valid[i] {
        return Some(i);
    }
    (1..valid.len()).find_map(|d| {
        if i >= d && valid[i - d] {
            Some(i - d)
        } else if i + d < valid.len() && valid[i + d] {
            Some(i + d)
        } else {
            None
        }
    })
}

/// Source frame for each of the `t` output frames, with invalid frames
/// replaced by their nearest valid neighbour.
pub fn sample_plan(valid: &[bool], t: usize) -> Result<Vec<usize>> {
    if t == 0 {
        return Err(Error::InvalidArgument("target length must be positive".into()));
    }
    if !valid.iter().any(|&v| v) {
        return Err(Error::Data("no valid frames to resample".into()));
    }
    Ok(uniform_indices(valid.len(), t)
        .into_iter()
        .map(|i| nearest_valid(valid, i).expect("at least one valid frame"))
        .collect())
}

pub fn standardize_time(roi: &RoiClip, t: usize) -> Result<RoiClip> {
    let plan = sample_plan(&roi.valid, t)?;
    Ok(RoiClip {
        kind: roi.kind,
        frames: plan.iter().map(|&i| roi.frames[i].clone()).collect(),
        valid: vec![true; t],
        fps: roi.fps * t as f64 / roi.frames.len() as f64,
    })
}
