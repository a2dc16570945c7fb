//! Noncontact anxiety screening from face video.
//!
//! The pipeline runs from landmark and frame files to a screening verdict:
//!
//! * [`ingest`]: landmark/frame loading, clip validation, ROI cropping,
//!   temporal standardization, class balancing and splitting.
//! * [`ippg`]: pixel-mean traces, 10 s subblocks and heart/respiration band
//!   spectra from the nose and forehead.
//! * [`behavior`]: head-location sequences and eye/mouth clips.
//! * [`network`]: 3D CNN with temporal and spatial attention, LSTM streams
//!   and a fused classifier head, built on [`autodiff`].
//! * [`siamese`]: shared-weight pair training, screening against an
//!   anxiety-free reference set, permutation importance.
//! * [`metrics`]: confusion counts, precision/sensitivity/specificity/
//!   accuracy/F1 and ROC/AUC.
//! * [`features`]: per-sample stream extraction and the feature cache.
//! * [`gradcheck`]: finite-difference checks of autodiff gradients.
//! * [`synth`]: seeded synthetic clips with known ground truth.

pub mod autodiff;
pub mod behavior;
pub mod error;
pub mod features;
pub mod formats;
pub mod gradcheck;
pub mod ingest;
pub mod ippg;
pub mod metrics;
pub mod network;
pub mod optim;
pub mod params;
pub mod siamese;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
