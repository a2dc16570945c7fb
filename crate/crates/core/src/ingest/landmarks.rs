//! Landmark text files: one frame per line,
//! `frame_index valid x1 y1 z1 ... x468 y468 z468`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::roi::NUM_LANDMARKS;
use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkSequence {
    frames: Vec<Vec<Point>>,
    valid: Vec<bool>,
    fps: f64,
}

impl LandmarkSequence {
    pub fn new(frames: Vec<Vec<Point>>, valid: Vec<bool>, fps: f64) -> Result<Self> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if frames.len() != valid.len() {
            return Err(Error::InvalidArgument(
                "valid mask length differs from frame count".into(),
            ));
        }
        for (i, (f, &ok)) in frames.iter().zip(&valid).enumerate() {
            if f.len() != NUM_LANDMARKS {
                return Err(Error::Data(format!(
                    "frame {i}: expected {NUM_LANDMARKS} points, found {}",
                    f.len()
                )));
            }
            if ok && f.iter().any(|p| !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) || !p[2].is_finite()) {
                return Err(Error::Data(format!(
                    "frame {i}: valid frame has coordinates outside [0, 1]"
                )));
            }
        }
        Ok(LandmarkSequence { frames, valid, fps })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frame(&self, i: usize) -> &[Point] {
        &self.frames[i]
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    pub fn valid_fraction(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.valid.iter().filter(|&&v| v).count() as f64 / self.frames.len() as f64
    }

    /// Text form accepted by [`parse_landmarks`]. Values use Rust's shortest
    /// round-trip formatting, so output is deterministic and lossless.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, (f, &ok)) in self.frames.iter().zip(&self.valid).enumerate() {
            write!(s, "{i} {}", u8::from(ok)).unwrap();
            for p in f {
                write!(s, " {} {} {}", p[0], p[1], p[2]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

/// Parses landmark text. `source` is only used in error messages.
pub fn parse_landmarks(text: &str, source: &Path, fps: f64) -> Result<LandmarkSequence> {
    let err = |line: usize, msg: String| Error::Parse {
        path: source.to_path_buf(),
        line,
        msg,
    };
    let mut frames = Vec::new();
    let mut valid = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut tok = raw.split_ascii_whitespace();
        let idx: usize = tok
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(line_no, "missing or malformed frame index".into()))?;
        if idx != frames.len() {
            return Err(err(
                line_no,
                format!("frame {idx}: expected frame index {}", frames.len()),
            ));
        }
        let ok = match tok.next() {
            Some("1") => true,
            Some("0") => false,
            other => {
                return Err(err(
                    line_no,
                    format!("frame {idx}: valid flag must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let vals: Vec<f64> = tok
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| err(line_no, format!("frame {idx}: bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() % 3 != 0 || vals.len() / 3 != NUM_LANDMARKS {
            return Err(err(
                line_no,
                format!(
                    "frame {idx}: expected {NUM_LANDMARKS} points, found {}",
                    vals.len() as f64 / 3.0
                ),
            ));
        }
        frames.push(vals.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect());
        valid.push(ok);
    }
    LandmarkSequence::new(frames, valid, fps).map_err(|e| match e {
        Error::Data(msg) => err(0, msg),
        other => other,
    })
}

pub fn load_landmarks(path: &Path, fps: f64) -> Result<LandmarkSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks(&text, path, fps)
}

pub fn write_landmarks(path: &Path, seq: &LandmarkSequence) -> Result<()> {
    fs::write(path, seq.to_text()).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClipVerdict {
    Accept { valid_fraction: f64 },
    Reject { valid_fraction: f64 },
}

impl ClipVerdict {
    pub fn accepted(&self) -> bool {
        matches!(self, ClipVerdict::Accept { .. })
    }
}

pub const DEFAULT_MIN_VALID_FRACTION: f64 = 0.9;

/// Quality gate: samples one frame per second and accepts the clip when the
/// fraction of sampled frames with a face reaches `min_valid_fraction`.
pub fn validate_clip(seq: &LandmarkSequence, min_valid_fraction: f64) -> ClipVerdict {
    let picks = per_second_indices(seq.len(), seq.fps());
    let valid_fraction = if picks.is_empty() {
        0.0
    } else {
        picks.iter().filter(|&&i| seq.is_valid(i)).count() as f64 / picks.len() as f64
    };
    if valid_fraction >= min_valid_fraction {
        ClipVerdict::Accept { valid_fraction }
    } else {
        ClipVerdict::Reject { valid_fraction }
    }
}

/// Frame index `floor(k * fps)` for every whole second `k` in the clip.
pub fn per_second_indices(n_frames: usize, fps: f64) -> Vec<usize> {
    if n_frames == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let i = (k as f64 * fps).floor() as usize;
        if i >= n_frames {
            break;
        }
        out.push(i);
        k += 1;
    }
    out
}
