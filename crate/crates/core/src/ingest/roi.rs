//! Landmark index sets for each region of interest.
//!
//! Indices are 0-based positions in the 468-point face mesh and follow the
//! common MediaPipe face-mesh numbering. Bump [`ROI_TABLE_VERSION`] whenever
//! a set changes; cached features depend on it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const ROI_TABLE_VERSION: u32 = 1;

pub const NUM_LANDMARKS: usize = 468;

pub const LEFT_EYE: [usize; 16] = [
    362, 382, 381, 380, 374, 373, 390, 249, 263, 466, 388, 387, 386, 385, 384, 398,
];

pub const RIGHT_EYE: [usize; 16] = [
    33, 7, 163, 144, 145, 153, 154, 155, 133, 173, 157, 158, 159, 160, 161, 246,
];

pub const MOUTH: [usize; 20] = [
    61, 146, 91, 181, 84, 17, 314, 405, 321, 375, 291, 409, 270, 269, 267, 0, 37, 39, 40, 185,
];

/// Lower nose and alae; the bridge (6, 168) is left out so the padded box
/// stays clear of the eyes.
pub const NOSE: [usize; 16] = [
    1, 2, 4, 5, 19, 45, 48, 64, 94, 97, 98, 275, 278, 294, 326, 327,
];

pub const FOREHEAD: [usize; 12] = [10, 67, 69, 104, 108, 109, 151, 297, 299, 333, 337, 338];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiKind {
    Eyes,
    Mouth,
    Nose,
    Forehead,
}

impl RoiKind {
    /// Both eyes share one box.
    pub fn indices(self) -> Vec<usize> {
        match self {
            RoiKind::Eyes => LEFT_EYE.iter().chain(RIGHT_EYE.iter()).copied().collect(),
            RoiKind::Mouth => MOUTH.to_vec(),
            RoiKind::Nose => NOSE.to_vec(),
            RoiKind::Forehead => FOREHEAD.to_vec(),
        }
    }

    /// Eyes and mouth are resized for the CNN; nose and forehead keep their
    /// native crop for pixel averaging.
    pub fn is_resized(self) -> bool {
        matches!(self, RoiKind::Eyes | RoiKind::Mouth)
    }
}

impl fmt::Display for RoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoiKind::Eyes => "eyes",
            RoiKind::Mouth => "mouth",
            RoiKind::Nose => "nose",
            RoiKind::Forehead => "forehead",
        })
    }
}

impl FromStr for RoiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "eyes" => Ok(RoiKind::Eyes),
            "mouth" => Ok(RoiKind::Mouth),
            "nose" => Ok(RoiKind::Nose),
            "forehead" => Ok(RoiKind::Forehead),
            _ => Err(Error::InvalidArgument(format!("unknown roi kind {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn sets_are_in_range_and_disjoint() {
        let kinds = [RoiKind::Eyes, RoiKind::Mouth, RoiKind::Nose, RoiKind::Forehead];
        let mut seen = HashSet::new();
        for k in kinds {
            for i in k.indices() {
                assert!(i < NUM_LANDMARKS);
                assert!(seen.insert(i), "index {i} used twice");
            }
        }
    }
}
