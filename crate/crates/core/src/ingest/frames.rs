//! Frame clips and landmark-driven ROI cropping.

use std::path::Path;

use super::landmarks::LandmarkSequence;
use super::roi::RoiKind;
use crate::error::{Error, Result};
use crate::formats;
use crate::tensor::Tensor;

/// Box padding on every side, as a fraction of the landmark box extent.
pub const BOX_PADDING: f64 = 0.25;

pub const DEFAULT_ROI_SIZE: usize = 40;

/// `[M,H,W,3]` frames with values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameClip {
    frames: Tensor,
    fps: f64,
}

impl FrameClip {
    pub fn new(frames: Tensor, fps: f64) -> Result<Self> {
        let s = frames.shape();
        if s.len() != 4 || s[3] != 3 {
            return Err(Error::shape(
                "frame clip",
                format!("expected [M,H,W,3], got {s:?}"),
            ));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if frames.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("frame values must lie in [0, 1]".into()));
        }
        Ok(FrameClip { frames, fps })
    }

    pub fn len(&self) -> usize {
        self.frames.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> usize {
        self.frames.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.frames.shape()[2]
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn tensor(&self) -> &Tensor {
        &self.frames
    }

    /// Pixels of frame `i`, `[H,W,3]` row-major.
    pub fn frame(&self, i: usize) -> &[f64] {
        let n = self.height() * self.width() * 3;
        &self.frames.data()[i * n..(i + 1) * n]
    }

    /// Clips need two full 10 s windows for iPPG.
    pub fn check_duration(&self) -> Result<()> {
        let need = (self.fps * 20.0).ceil() as usize;
        if self.len() < need {
            return Err(Error::Data(format!(
                "clip has {} frames, at least {need} (20 s) required",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Loads a clip from an `SFFT` container (`[M,H,W,3]`) or, when `path` is a
/// directory, from its PNG frames in file-name order.
pub fn load_frames(path: &Path, fps: f64) -> Result<FrameClip> {
    if path.is_dir() {
        return load_png_dir(path, fps);
    }
    FrameClip::new(formats::read_sfft(path)?, fps)
}

#[cfg(feature = "png")]
fn load_png_dir(dir: &Path, fps: f64) -> Result<FrameClip> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("{}: no PNG frames", dir.display())));
    }
    let mut data = Vec::new();
    let mut dims = None;
    for f in &files {
        let img = image::open(f)
            .map_err(|e| Error::Format(format!("{}: {e}", f.display())))?
            .to_rgb8();
        let d = (img.height() as usize, img.width() as usize);
        if *dims.get_or_insert(d) != d {
            return Err(Error::Data(format!("{}: frame size differs", f.display())));
        }
        data.extend(img.as_raw().iter().map(|&b| b as f64 / 255.0));
    }
    let (h, w) = dims.unwrap();
    FrameClip::new(Tensor::new(vec![files.len(), h, w, 3], data)?, fps)
}

#[cfg(not(feature = "png"))]
fn load_png_dir(dir: &Path, _fps: f64) -> Result<FrameClip> {
    Err(Error::Format(format!(
        "{}: PNG frame directories need the `png` feature",
        dir.display()
    )))
}

/// Half-open pixel box `[x0,x1) x [y0,y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0
    }
}

/// Padded, clamped bounding box of `indices` in frame `frame`. `None` when
/// the frame has no face or the box is empty.
pub fn roi_box(seq: &LandmarkSequence, frame: usize, indices: &[usize], width: usize, height: usize) -> Option<PixelBox> {
    if !seq.is_valid(frame) {
        return None;
    }
    let pts = seq.frame(frame);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &i in indices {
        let [x, y, _] = pts[i];
        xmin = xmin.min(x * width as f64);
        xmax = xmax.max(x * width as f64);
        ymin = ymin.min(y * height as f64);
        ymax = ymax.max(y * height as f64);
    }
    let (pw, ph) = ((xmax - xmin) * BOX_PADDING, (ymax - ymin) * BOX_PADDING);
    let clamp = |v: f64, hi: usize| v.round().clamp(0.0, hi as f64) as usize;
    let b = PixelBox {
        x0: clamp(xmin - pw, width),
        x1: clamp(xmax + pw, width),
        y0: clamp(ymin - ph, height),
        y1: clamp(ymax + ph, height),
    };
    (b.x1 > b.x0 && b.y1 > b.y0).then_some(b)
}

/// Copies `b` out of an `[H,W,3]` frame.
pub fn crop(frame: &[f64], width: usize, b: PixelBox) -> Tensor {
    let mut out = Vec::with_capacity(b.width() * b.height() * 3);
    for y in b.y0..b.y1 {
        out.extend_from_slice(&frame[(y * width + b.x0) * 3..(y * width + b.x1) * 3]);
    }
    Tensor::new(vec![b.height(), b.width(), 3], out).expect("non-empty box")
}

/// Bilinear resize of an `[h,w,3]` image with half-pixel centers and edge
/// clamping.
pub fn resize_bilinear(img: &Tensor, out_h: usize, out_w: usize) -> Tensor {
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let src = img.data();
    let axis = |o: usize, n_out: usize, n_in: usize| {
        let pos = ((o as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, pos - i0 as f64)
    };
    let mut out = Vec::with_capacity(out_h * out_w * 3);
    for oy in 0..out_h {
        let (y0, y1, fy) = axis(oy, out_h, h);
        for ox in 0..out_w {
            let (x0, x1, fx) = axis(ox, out_w, w);
            for c in 0..3 {
                let p = |y: usize, x: usize| src[(y * w + x) * 3 + c];
                let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
                let bot = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
                out.push(top * (1.0 - fy) + bot * fy);
            }
        }
    }
    Tensor::new(vec![out_h, out_w, 3], out).expect("resize shape")
}

/// Per-frame ROI crops. Eyes and mouth frames are `[S,S,3]`; nose and
/// forehead frames keep their native crop size.
#[derive(Clone, Debug, PartialEq)]
pub struct RoiClip {
    pub kind: RoiKind,
    pub frames: Vec<Tensor>,
    /// Whether the source frame had a face.
    pub valid: Vec<bool>,
    pub fps: f64,
}

impl RoiClip {
    /// Stacks equally sized frames into `[T,h,w,3]`.
    pub fn to_tensor(&self) -> Result<Tensor> {
        let first = self.frames[0].shape().to_vec();
        let mut data = Vec::with_capacity(self.frames.len() * self.frames[0].numel());
        for f in &self.frames {
            if f.shape() != first.as_slice() {
                return Err(Error::shape("roi clip", "frames differ in size"));
            }
            data.extend_from_slice(f.data());
        }
        Tensor::new(vec![self.frames.len(), first[0], first[1], 3], data)
    }
}

/// Crops `kind` from every frame. Frames without a usable box reuse the
/// previous frame's box; the first frame must have one.
pub fn crop_roi(clip: &FrameClip, seq: &LandmarkSequence, kind: RoiKind, roi_size: usize) -> Result<RoiClip> {
    if clip.len() != seq.len() {
        return Err(Error::Data(format!(
            "clip has {} frames but landmarks have {}",
            clip.len(),
            seq.len()
        )));
    }
    let idx = kind.indices();
    let (w, h) = (clip.width(), clip.height());
    let mut prev: Option<PixelBox> = None;
    let mut frames = Vec::with_capacity(clip.len());
    for i in 0..clip.len() {
        let b = match (roi_box(seq, i, &idx, w, h), prev) {
            (Some(b), _) => b,
            (None, Some(p)) => p,
            (None, None) => {
                return Err(Error::Data(format!(
                    "{kind} box is degenerate in frame {i} with no earlier frame to fall back on"
                )))
            }
        };
        prev = Some(b);
        let c = crop(clip.frame(i), w, b);
        frames.push(if kind.is_resized() {
            resize_bilinear(&c, roi_size, roi_size)
        } else {
            c
        });
    }
    Ok(RoiClip {
        kind,
        frames,
        valid: seq.valid().to_vec(),
        fps: clip.fps(),
    })
}
