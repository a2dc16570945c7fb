//! Seeded synthetic faces with known ground truth.
//!
//! A face is a skin-colored box with two eye boxes, a mouth box, and nose and
//! forehead skin patches. The whole skin area carries a green-channel pulse.
//! Eye boxes hold a dark band whose height oscillates (flicker), the mouth
//! holds an oscillating opening, and the head drifts linearly. Landmarks are
//! a fixed template whose ROI index sets span exactly their feature boxes.
//!
//! Class differences are confined to `signal_streams`; everything else is
//! drawn from the same distribution for both classes.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig};
use crate::formats::write_sfft;
use crate::ingest::landmarks::write_landmarks;
use crate::ingest::roi::{FOREHEAD, LEFT_EYE, MOUTH, NOSE, RIGHT_EYE};
use crate::ingest::{DatasetManifest, FrameClip, Label, LandmarkSequence, Point, SampleEntry, NUM_LANDMARKS};
use crate::ippg::HR_BAND;
use crate::network::Stream;
use crate::siamese::Sample;
use crate::tensor::Tensor;

/// Face-relative rectangle `[x0, x1] x [y0, y1]`.
type Rect = [f64; 4];

const FACE: Rect = [0.10, 0.90, 0.10, 0.90];
const FOREHEAD_RECT: Rect = [0.30, 0.70, 0.16, 0.28];
const LEFT_EYE_RECT: Rect = [0.28, 0.44, 0.36, 0.46];
const RIGHT_EYE_RECT: Rect = [0.56, 0.72, 0.36, 0.46];
const NOSE_RECT: Rect = [0.44, 0.56, 0.52, 0.64];
const MOUTH_RECT: Rect = [0.38, 0.62, 0.72, 0.84];

const BACKGROUND: [f64; 3] = [0.15, 0.15, 0.15];
const SKIN: [f64; 3] = [0.80, 0.60, 0.50];
const SCLERA: [f64; 3] = [0.95, 0.95, 0.95];
const PUPIL: [f64; 3] = [0.10, 0.10, 0.10];
const LIPS: [f64; 3] = [0.75, 0.35, 0.35];
const MOUTH_GAP: [f64; 3] = [0.20, 0.05, 0.05];

/// Per-class signal parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub pulse_hz: f64,
    /// Resting height of the dark eye band as a fraction of the eye box.
    pub eye_open: f64,
    pub eye_flicker_amp: f64,
    pub eye_flicker_hz: f64,
    pub mouth_open: f64,
    pub mouth_amp: f64,
    pub mouth_hz: f64,
    /// Head velocity in frame widths/heights per second.
    pub drift: [f64; 2],
}

impl ClassProfile {
    pub fn anxiety_free() -> Self {
        ClassProfile {
            pulse_hz: 1.2,
            eye_open: 0.3,
            eye_flicker_amp: 0.05,
            eye_flicker_hz: 0.5,
            mouth_open: 0.15,
            mouth_amp: 0.05,
            mouth_hz: 0.3,
            drift: [0.0, 0.0],
        }
    }

    pub fn anxiety() -> Self {
        ClassProfile {
            pulse_hz: 1.8,
            eye_open: 0.7,
            eye_flicker_amp: 0.25,
            eye_flicker_hz: 2.0,
            mouth_open: 0.5,
            mouth_amp: 0.2,
            mouth_hz: 1.0,
            drift: [0.003, 0.0015],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_free: usize,
    pub n_anxiety: usize,
    pub fps: f64,
    pub duration_s: f64,
    /// Square frame side in pixels.
    pub frame_size: usize,
    pub pulse_amp: f64,
    /// Per-pixel Gaussian noise standard deviation.
    pub noise: f64,
    /// Maximum random face offset, in frame fractions.
    pub jitter: f64,
    /// Streams whose parameters differ between the classes.
    pub signal_streams: Vec<Stream>,
    pub free: ClassProfile,
    pub anxiety: ClassProfile,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 0,
            n_free: 20,
            n_anxiety: 20,
            fps: 10.0,
            duration_s: 20.0,
            frame_size: 32,
            pulse_amp: 0.05,
            noise: 0.01,
            jitter: 0.01,
            signal_streams: Stream::ALL.to_vec(),
            free: ClassProfile::anxiety_free(),
            anxiety: ClassProfile::anxiety(),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.fps > 0.0) || !(self.duration_s >= 20.0) {
            return bad(format!(
                "need fps > 0 and duration >= 20 s (got {} fps, {} s)",
                self.fps, self.duration_s
            ));
        }
        if self.frame_size < 16 {
            return bad(format!("frame_size {} is below 16", self.frame_size));
        }
        if !(0.0..=0.05).contains(&self.jitter) || self.noise < 0.0 || self.pulse_amp < 0.0 {
            return bad("jitter must be in [0, 0.05]; noise and pulse_amp non-negative".into());
        }
        for p in [&self.free, &self.anxiety] {
            if !(HR_BAND.0..=HR_BAND.1).contains(&p.pulse_hz) {
                return bad(format!("pulse {} Hz is outside the HR band", p.pulse_hz));
            }
            let max_hz = p.pulse_hz.max(p.eye_flicker_hz).max(p.mouth_hz);
            if 2.0 * max_hz >= self.fps {
                return bad(format!("{max_hz} Hz is not below Nyquist at {} fps", self.fps));
            }
            let travel = p.drift[0].abs().max(p.drift[1].abs()) * self.duration_s;
            if travel + self.jitter > 0.1 {
                return bad("head drift leaves the frame".into());
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        (self.fps * self.duration_s).round() as usize
    }

    /// Profile for `label`: the anxiety values on signal streams only.
    pub fn profile(&self, label: Label) -> ClassProfile {
        let mut p = self.free;
        if label == Label::AnxietyFree {
            return p;
        }
        let a = self.anxiety;
        for s in &self.signal_streams {
            match s {
                Stream::Location => p.drift = a.drift,
                Stream::Eyes => {
                    p.eye_open = a.eye_open;
                    p.eye_flicker_amp = a.eye_flicker_amp;
                    p.eye_flicker_hz = a.eye_flicker_hz;
                }
                Stream::Mouth => {
                    p.mouth_open = a.mouth_open;
                    p.mouth_amp = a.mouth_amp;
                    p.mouth_hz = a.mouth_hz;
                }
                Stream::Ippg => p.pulse_hz = a.pulse_hz,
            }
        }
        p
    }

    /// Sample ids and labels: anxiety-free first, then anxiety.
    pub fn roster(&self) -> Vec<(String, Label)> {
        let free = (0..self.n_free).map(|_| Label::AnxietyFree);
        let anx = (0..self.n_anxiety).map(|_| Label::Anxiety);
        free.chain(anx)
            .enumerate()
            .map(|(i, l)| (format!("s{i:03}"), l))
            .collect()
    }
}

/// A rendered clip with its landmarks.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthClip {
    pub clip: FrameClip,
    pub landmarks: LandmarkSequence,
}

fn grid(rect: Rect, n: usize) -> Vec<(f64, f64)> {
    let cols = (n as f64).sqrt().ceil().max(2.0) as usize;
    let rows = n.div_ceil(cols).max(2);
    let mut pts = Vec::with_capacity(n);
    for i in 0..n {
        let (c, r) = (i % cols, i / cols);
        let fx = c as f64 / (cols - 1) as f64;
        let fy = if n <= cols { (i % 2) as f64 } else { r as f64 / (rows - 1) as f64 };
        pts.push((rect[0] + fx * (rect[1] - rect[0]), rect[2] + fy * (rect[3] - rect[2])));
    }
    // The last point pins the far corner so the set spans the whole box.
    if let Some(p) = pts.last_mut() {
        *p = (rect[1], rect[3]);
    }
    pts[0] = (rect[0], rect[2]);
    pts
}

/// Face-relative landmark template with ROI sets laid out on their boxes.
pub fn landmark_template() -> Vec<(f64, f64)> {
    let mut pts = vec![(f64::NAN, f64::NAN); NUM_LANDMARKS];
    let sets: [(&[usize], Rect); 5] = [
        (&FOREHEAD, FOREHEAD_RECT),
        (&LEFT_EYE, LEFT_EYE_RECT),
        (&RIGHT_EYE, RIGHT_EYE_RECT),
        (&NOSE, NOSE_RECT),
        (&MOUTH, MOUTH_RECT),
    ];
    for (idx, rect) in sets {
        for (&i, p) in idx.iter().zip(grid(rect, idx.len())) {
            pts[i] = p;
        }
    }
    let free: Vec<usize> = (0..NUM_LANDMARKS).filter(|&i| pts[i].0.is_nan()).collect();
    for (&i, p) in free.iter().zip(grid(FACE, free.len())) {
        pts[i] = p;
    }
    pts
}

fn quantize(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Fraction of `[a0, a1]` covered by `[b0, b1]`.
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    ((a1.min(b1) - a0.max(b0)).max(0.0)) / (a1 - a0)
}

fn inside(rect: Rect, x: f64, y: f64) -> bool {
    x >= rect[0] && x < rect[1] && y >= rect[2] && y < rect[3]
}

fn blend(a: [f64; 3], b: [f64; 3], w: f64) -> [f64; 3] {
    [0, 1, 2].map(|c| a[c] * (1.0 - w) + b[c] * w)
}

/// Dark band of relative height `h` centered in `rect`, anti-aliased
/// vertically over the pixel row `[y0, y1]`.
fn band_cover(rect: Rect, h: f64, y0: f64, y1: f64) -> f64 {
    let c = 0.5 * (rect[2] + rect[3]);
    let half = 0.5 * h.clamp(0.0, 1.0) * (rect[3] - rect[2]);
    overlap(y0, y1, c - half, c + half)
}

struct Phases {
    pulse: f64,
    eye: f64,
    mouth: f64,
}

/// Renders one clip. `index` selects the per-sample random stream.
pub fn gen_pulse_clip(spec: &SynthSpec, profile: &ClassProfile, index: u64) -> Result<SynthClip> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let phases = Phases {
        pulse: rng.random_range(0.0..TAU),
        eye: rng.random_range(0.0..TAU),
        mouth: rng.random_range(0.0..TAU),
    };
    let offset = [
        rng.random_range(-spec.jitter..=spec.jitter),
        rng.random_range(-spec.jitter..=spec.jitter),
    ];
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let template = landmark_template();
    let (m, s) = (spec.frames(), spec.frame_size);
    let px = 1.0 / s as f64;
    let mut data = Vec::with_capacity(m * s * s * 3);
    let mut marks = Vec::with_capacity(m);
    for f in 0..m {
        let t = f as f64 / spec.fps;
        let ox = quantize(offset[0] + profile.drift[0] * t);
        let oy = quantize(offset[1] + profile.drift[1] * t);
        let pulse = spec.pulse_amp * (TAU * profile.pulse_hz * t + phases.pulse).sin();
        let eye_h = profile.eye_open + profile.eye_flicker_amp * (TAU * profile.eye_flicker_hz * t + phases.eye).sin();
        let mouth_h = profile.mouth_open + profile.mouth_amp * (TAU * profile.mouth_hz * t + phases.mouth).sin();
        let skin = [SKIN[0], SKIN[1] + pulse, SKIN[2]];
        for yi in 0..s {
            let y0 = yi as f64 * px - oy;
            let (y1, yc) = (y0 + px, y0 + 0.5 * px);
            for xi in 0..s {
                let xc = (xi as f64 + 0.5) * px - ox;
                let rgb = if inside(LEFT_EYE_RECT, xc, yc) || inside(RIGHT_EYE_RECT, xc, yc) {
                    let rect = if xc < 0.5 { LEFT_EYE_RECT } else { RIGHT_EYE_RECT };
                    blend(SCLERA, PUPIL, band_cover(rect, eye_h, y0, y1))
                } else if inside(MOUTH_RECT, xc, yc) {
                    blend(LIPS, MOUTH_GAP, band_cover(MOUTH_RECT, mouth_h, y0, y1))
                } else if inside(FACE, xc, yc) {
                    skin
                } else {
                    BACKGROUND
                };
                for v in rgb {
                    let n = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    data.push((v + n).clamp(0.0, 1.0) as f32 as f64);
                }
            }
        }
        marks.push(
            template
                .iter()
                .map(|&(x, y)| -> Point { [quantize(x + ox), quantize(y + oy), 0.0] })
                .collect(),
        );
    }
    let clip = FrameClip::new(Tensor::new(vec![m, s, s, 3], data)?, spec.fps)?;
    let landmarks = LandmarkSequence::new(marks, vec![true; m], spec.fps)?;
    Ok(SynthClip { clip, landmarks })
}

/// Renders roster entry `index`.
pub fn gen_sample(spec: &SynthSpec, index: usize) -> Result<(String, Label, SynthClip)> {
    let roster = spec.roster();
    let (id, label) = roster
        .get(index)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("sample index {index} out of range")))?;
    let clip = gen_pulse_clip(spec, &spec.profile(label), index as u64)?;
    Ok((id, label, clip))
}

/// Writes `<id>.lmk`, `<id>.sfft` and `manifest.toml` under `dir`.
pub fn gen_classification_set(spec: &SynthSpec, dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for i in 0..spec.n_free + spec.n_anxiety {
        let (id, label, c) = gen_sample(spec, i)?;
        let (lmk, frames) = (PathBuf::from(format!("{id}.lmk")), PathBuf::from(format!("{id}.sfft")));
        write_landmarks(&dir.join(&lmk), &c.landmarks)?;
        write_sfft(&dir.join(&frames), c.clip.tensor())?;
        entries.push(SampleEntry {
            id,
            landmarks: lmk,
            frames,
            label,
            fps: spec.fps,
            split: None,
        });
    }
    let mut m = DatasetManifest::new(entries)?;
    m.save(&dir.join("manifest.toml"))?;
    m.base_dir = dir.to_path_buf();
    Ok(m)
}

/// Renders and featurizes the whole roster without touching disk.
pub fn gen_samples(spec: &SynthSpec, cfg: &FeatureConfig) -> Result<Vec<Sample>> {
    (0..spec.n_free + spec.n_anxiety)
        .map(|i| {
            let (id, label, c) = gen_sample(spec, i)?;
            Ok(Sample {
                id,
                label,
                inputs: extract_features(&c.clip, &c.landmarks, cfg)?,
            })
        })
        .collect()
}
