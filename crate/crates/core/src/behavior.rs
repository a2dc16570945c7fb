//! Behavioral streams: head location, eye clips, mouth clips.

use crate::error::Result;
use crate::ingest::temporal::{sample_plan, standardize_time};
use crate::ingest::{crop_roi, FrameClip, LandmarkSequence, RoiClip, RoiKind, NUM_LANDMARKS};
use crate::tensor::Tensor;

pub const LOCATION_DIM: usize = NUM_LANDMARKS * 3;

/// `[T, 1404]`: per resampled frame, `(x, y, z)` of every landmark in index
/// order. Invalid frames are replaced by their nearest valid frame.
pub fn location_feature(seq: &LandmarkSequence, t: usize) -> Result<Tensor> {
    let plan = sample_plan(seq.valid(), t)?;
    let mut data = Vec::with_capacity(t * LOCATION_DIM);
    for i in plan {
        for p in seq.frame(i) {
            data.extend_from_slice(p);
        }
    }
    Tensor::new(vec![t, LOCATION_DIM], data)
}

/// `[T,S,S,3]` frames to channels-first `[3,T,S,S]`.
pub fn channels_first(roi: &RoiClip) -> Result<Tensor> {
    let x = roi.to_tensor()?;
    let s = x.shape();
    let (t, h, w) = (s[0], s[1], s[2]);
    let src = x.data();
    let mut out = vec![0.0; x.numel()];
    for ti in 0..t {
        for yi in 0..h {
            for xi in 0..w {
                for c in 0..3 {
                    out[((c * t + ti) * h + yi) * w + xi] = src[((ti * h + yi) * w + xi) * 3 + c];
                }
            }
        }
    }
    Tensor::new(vec![3, t, h, w], out)
}

fn clip_feature(clip: &FrameClip, seq: &LandmarkSequence, kind: RoiKind, t: usize, roi_size: usize) -> Result<Tensor> {
    let roi = crop_roi(clip, seq, kind, roi_size)?;
    channels_first(&standardize_time(&roi, t)?)
}

/// `[3, T, S, S]` eye-region clip.
pub fn eyes_feature(clip: &FrameClip, seq: &LandmarkSequence, t: usize, roi_size: usize) -> Result<Tensor> {
    clip_feature(clip, seq, RoiKind::Eyes, t, roi_size)
}

/// `[3, T, S, S]` mouth-region clip.
pub fn mouth_feature(clip: &FrameClip, seq: &LandmarkSequence, t: usize, roi_size: usize) -> Result<Tensor> {
    clip_feature(clip, seq, RoiKind::Mouth, t, roi_size)
}
