//! Input loading and preprocessing: landmarks, frames, ROI crops, fixed
//! temporal length, class balance and train/test split.

pub mod frames;
pub mod landmarks;
pub mod manifest;
pub mod roi;
pub mod temporal;

pub use frames::{crop_roi, load_frames, FrameClip, PixelBox, RoiClip, DEFAULT_ROI_SIZE};
pub use landmarks::{load_landmarks, validate_clip, ClipVerdict, LandmarkSequence, Point};
pub use manifest::{
    balance_classes, imbalance_threshold, manifest_threshold, split, DatasetManifest, Label,
    SampleEntry, Split,
};
pub use roi::{RoiKind, NUM_LANDMARKS};
pub use temporal::{standardize_time, uniform_indices, DEFAULT_T};
