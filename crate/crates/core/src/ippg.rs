//! Imaging photoplethysmography features from nose and forehead crops.
//!
//! Per frame, each ROI is reduced to its per-channel pixel mean. The traces
//! are cut into consecutive 10 s subblocks; each subblock contributes the
//! DFT magnitudes inside the heart-rate and respiration bands plus four
//! time-domain statistics per channel.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::ingest::{RoiClip, RoiKind};
use crate::tensor::Tensor;

pub const SUBBLOCK_SECONDS: f64 = 10.0;
pub const HR_BAND: (f64, f64) = (0.75, 3.33);
pub const RR_BAND: (f64, f64) = (0.15, 0.40);
/// mean, std, min, max
pub const N_STATS: usize = 4;

pub const CHANNELS: [&str; 3] = ["r", "g", "b"];

/// Per-channel pixel-mean series.
#[derive(Clone, Debug, PartialEq)]
pub struct PmTrace {
    pub channels: [Vec<f64>; 3],
    pub fps: f64,
}

impl PmTrace {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn pixel_mean(roi: &RoiClip) -> Result<PmTrace> {
    if !matches!(roi.kind, RoiKind::Nose | RoiKind::Forehead) {
        return Err(Error::InvalidArgument(format!(
            "pixel means are taken over nose or forehead crops, got {}",
            roi.kind
        )));
    }
    if roi.frames.is_empty() {
        return Err(Error::Data("empty ROI clip".into()));
    }
    let mut channels: [Vec<f64>; 3] = Default::default();
    for f in &roi.frames {
        let px = f.data();
        let n = px.len() / 3;
        if n == 0 {
            return Err(Error::Data("empty ROI frame".into()));
        }
        for (c, out) in channels.iter_mut().enumerate() {
            let s: f64 = px.iter().skip(c).step_by(3).sum();
            out.push(s / n as f64);
        }
    }
    Ok(PmTrace {
        channels,
        fps: roi.fps,
    })
}

/// Channel statistics of the raw (pre-detrend) window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl ChannelStats {
    fn of(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        ChannelStats {
            mean,
            std: var.sqrt(),
            min: x.iter().copied().fold(f64::INFINITY, f64::min),
            max: x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn as_array(&self) -> [f64; N_STATS] {
        [self.mean, self.std, self.min, self.max]
    }
}

/// One 10 s window: mean-removed `[3, T']` samples (rows R, G, B).
#[derive(Clone, Debug, PartialEq)]
pub struct Subblock {
    pub index: usize,
    pub samples: Tensor,
    pub stats: [ChannelStats; 3],
    pub fps: f64,
}

impl Subblock {
    pub fn len(&self) -> usize {
        self.samples.shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.len();
        &self.samples.data()[c * n..(c + 1) * n]
    }
}

pub fn subblock_len(fps: f64) -> usize {
    (SUBBLOCK_SECONDS * fps).round() as usize
}

/// Non-overlapping 10 s windows; a trailing partial window is dropped.
pub fn subblocks(trace: &PmTrace) -> Result<Vec<Subblock>> {
    let n = subblock_len(trace.fps);
    if n < 2 || trace.len() < 2 * n {
        return Err(Error::Data(format!(
            "trace of {} samples is shorter than 20 s at {} fps",
            trace.len(),
            trace.fps
        )));
    }
    Ok((0..trace.len() / n)
        .map(|k| {
            let mut data = Vec::with_capacity(3 * n);
            let mut stats = [ChannelStats::of(&[0.0]); 3];
            for (c, ch) in trace.channels.iter().enumerate() {
                let w = &ch[k * n..(k + 1) * n];
                stats[c] = ChannelStats::of(w);
                data.extend(w.iter().map(|v| v - stats[c].mean));
            }
            Subblock {
                index: k,
                samples: Tensor::new(vec![3, n], data).expect("subblock shape"),
                stats,
                fps: trace.fps,
            }
        })
        .collect())
}

/// Full complex DFT, `X_j = sum_t x_t exp(-2 pi i j t / n)`, no scaling.
pub fn dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Bins `j` whose frequency `j * fps / n` lies in `[lo, hi]`.
pub fn band_bins(n: usize, fps: f64, band: (f64, f64)) -> RangeInclusive<usize> {
    let freq = |j: usize| j as f64 * fps / n as f64;
    let first = (0..=n / 2).find(|&j| freq(j) >= band.0).unwrap_or(n / 2 + 1);
    let last = (0..=n / 2).rev().find(|&j| freq(j) <= band.1).unwrap_or(0);
    first..=last
}

/// Single-sided amplitudes `2 |X_j| / n` inside the HR and RR bands, per
/// channel.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMagnitudes {
    pub hr: [Vec<f64>; 3],
    pub rr: [Vec<f64>; 3],
    pub hr_bins: RangeInclusive<usize>,
    pub rr_bins: RangeInclusive<usize>,
    pub resolution_hz: f64,
}

pub fn band_features(sb: &Subblock) -> BandMagnitudes {
    let n = sb.len();
    let hr_bins = band_bins(n, sb.fps, HR_BAND);
    let rr_bins = band_bins(n, sb.fps, RR_BAND);
    let mut hr: [Vec<f64>; 3] = Default::default();
    let mut rr: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let spec = dft(sb.channel(c));
        let amp = |j: usize| 2.0 * spec[j].norm() / n as f64;
        hr[c] = hr_bins.clone().map(amp).collect();
        rr[c] = rr_bins.clone().map(amp).collect();
    }
    BandMagnitudes {
        hr,
        rr,
        hr_bins,
        rr_bins,
        resolution_hz: sb.fps / n as f64,
    }
}

/// `[K, D]` per-subblock features for the LSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct IppgFeature {
    pub sequence: Tensor,
}

/// Feature width per subblock at `fps`: `2 ROIs x 3 channels x (HR + RR + 4)`.
pub fn ippg_dim(fps: f64) -> usize {
    let n = subblock_len(fps);
    let hr = band_bins(n, fps, HR_BAND).count();
    let rr = band_bins(n, fps, RR_BAND).count();
    2 * 3 * (hr + rr + N_STATS)
}

/// Row layout: `[nose | forehead] x [R | G | B] x [HR bins | RR bins | stats]`.
pub fn assemble_ippg(nose: &PmTrace, forehead: &PmTrace) -> Result<IppgFeature> {
    if nose.fps != forehead.fps {
        return Err(Error::Data(format!(
            "nose trace at {} fps, forehead at {} fps",
            nose.fps, forehead.fps
        )));
    }
    let (nb, fb) = (subblocks(nose)?, subblocks(forehead)?);
    if nb.len() != fb.len() {
        return Err(Error::Data(format!(
            "nose has {} subblocks, forehead has {}",
            nb.len(),
            fb.len()
        )));
    }
    let mut rows = Vec::new();
    for (a, b) in nb.iter().zip(&fb) {
        for sb in [a, b] {
            let bands = band_features(sb);
            for c in 0..3 {
                rows.extend_from_slice(&bands.hr[c]);
                rows.extend_from_slice(&bands.rr[c]);
                rows.extend_from_slice(&sb.stats[c].as_array());
            }
        }
    }
    let k = nb.len();
    let d = rows.len() / k;
    Ok(IppgFeature {
        sequence: Tensor::new(vec![k, d], rows)?,
    })
}

/// Convenience: crops to traces to features.
pub fn ippg_from_rois(nose: &RoiClip, forehead: &RoiClip) -> Result<IppgFeature> {
    assemble_ippg(&pixel_mean(nose)?, &pixel_mean(forehead)?)
}

/// Delimited dump of both PM traces: `frame,time_s,nose_r,...,forehead_b`.
pub fn trace_csv(nose: &PmTrace, forehead: &PmTrace) -> String {
    let mut s = String::from("frame,time_s,nose_r,nose_g,nose_b,forehead_r,forehead_g,forehead_b\n");
    for t in 0..nose.len().min(forehead.len()) {
        write!(s, "{t},{}", t as f64 / nose.fps).unwrap();
        for tr in [nose, forehead] {
            for ch in &tr.channels {
                write!(s, ",{}", ch[t]).unwrap();
            }
        }
        s.push('\n');
    }
    s
}

/// Delimited dump of band amplitudes: `subblock,roi,channel,band,freq_hz,amplitude`.
pub fn band_csv(nose: &PmTrace, forehead: &PmTrace) -> Result<String> {
    let mut s = String::from("subblock,roi,channel,band,freq_hz,amplitude\n");
    for (name, tr) in [("nose", nose), ("forehead", forehead)] {
        for sb in subblocks(tr)? {
            let b = band_features(&sb);
            for c in 0..3 {
                for (band, bins, vals) in [("hr", &b.hr_bins, &b.hr[c]), ("rr", &b.rr_bins, &b.rr[c])] {
                    for (j, v) in bins.clone().zip(vals) {
                        writeln!(s, "{},{name},{},{band},{},{v}", sb.index, CHANNELS[c], j as f64 * b.resolution_hz).unwrap();
                    }
                }
            }
        }
    }
    Ok(s)
}
