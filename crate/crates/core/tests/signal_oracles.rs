mod common;

use std::f64::consts::TAU;

use proptest::prelude::*;
use rand::Rng;
use rustfft::num_complex::Complex;
use sffda_core::ingest::frames::{resize_bilinear, roi_box, PixelBox};
use sffda_core::ingest::temporal::sample_plan;
use sffda_core::ingest::{
    balance_classes, crop_roi, imbalance_threshold, split, standardize_time, DatasetManifest, Label, LandmarkSequence,
    RoiClip, RoiKind, SampleEntry, NUM_LANDMARKS,
};
use sffda_core::ippg::{
    assemble_ippg, band_bins, band_features, dft, ippg_dim, pixel_mean, subblocks, PmTrace, HR_BAND, RR_BAND,
};
use sffda_core::synth::{gen_pulse_clip, ClassProfile, SynthSpec};
use sffda_core::Tensor;

fn naive_dft(x: &[f64]) -> Vec<Complex<f64>> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let mut acc = Complex::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let a = -TAU * (j * t % n) as f64 / n as f64;
                acc += Complex::new(v * a.cos(), v * a.sin());
            }
            acc
        })
        .collect()
}

fn trace(len: usize, fps: f64, f: impl Fn(f64) -> [f64; 3]) -> PmTrace {
    let mut channels: [Vec<f64>; 3] = Default::default();
    for i in 0..len {
        let v = f(i as f64 / fps);
        for c in 0..3 {
            channels[c].push(v[c]);
        }
    }
    PmTrace { channels, fps }
}

#[test]
fn fft_matches_naive_dft() {
    let mut rng = common::rng(3);
    for n in [1, 7, 100, 250, 256] {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (fast, slow) = (dft(&x), naive_dft(&x));
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-9 * n as f64, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn fft_preserves_energy() {
    let mut rng = common::rng(4);
    for n in [10, 250, 333] {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let time: f64 = x.iter().map(|v| v * v).sum();
        let freq: f64 = dft(&x).iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        assert!((time - freq).abs() <= 1e-9 * time, "{time} vs {freq}");
    }
}

#[test]
fn band_edges_at_25_and_10_fps() {
    // 10 s windows give 0.1 Hz bins at any frame rate.
    assert_eq!(band_bins(250, 25.0, HR_BAND), 8..=33);
    assert_eq!(band_bins(250, 25.0, RR_BAND), 2..=4);
    assert_eq!(band_bins(100, 10.0, HR_BAND), 8..=33);
    assert_eq!(ippg_dim(25.0), 2 * 3 * (26 + 3 + 4));
    assert_eq!(ippg_dim(10.0), ippg_dim(25.0));
}

#[test]
fn on_grid_sinusoid_has_exact_amplitude() {
    let (a, f) = (0.3, 1.7);
    let tr = trace(500, 25.0, |t| [0.5, 0.5 + a * (TAU * f * t + 0.4).sin(), 0.5]);
    let sb = &subblocks(&tr).unwrap()[0];
    let b = band_features(sb);
    let k = 17 - b.hr_bins.start();
    assert!((b.hr[1][k] - a).abs() < 1e-12);
    for (j, v) in b.hr[1].iter().enumerate() {
        if j != k {
            assert!(v.abs() < 1e-12, "bin {j}: {v}");
        }
    }
    assert!(b.hr[0].iter().chain(&b.hr[2]).all(|v| v.abs() < 1e-12));
}

#[test]
fn band_amplitudes_match_naive_dft_of_centered_window() {
    // 0.25 Hz sits halfway between the 0.2 and 0.3 Hz bins.
    let tr = trace(500, 25.0, |t| {
        let s = (TAU * 0.25 * t + 1.1).sin();
        [0.1 * s, 0.4 + 0.2 * s, 0.3 - 0.05 * s]
    });
    for sb in subblocks(&tr).unwrap() {
        let b = band_features(&sb);
        let n = sb.len();
        for c in 0..3 {
            let raw = &tr.channels[c][sb.index * n..(sb.index + 1) * n];
            let mean = raw.iter().sum::<f64>() / n as f64;
            let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
            let spec = naive_dft(&centered);
            for (vals, bins) in [(&b.rr[c], &b.rr_bins), (&b.hr[c], &b.hr_bins)] {
                for (v, j) in vals.iter().zip(bins.clone()) {
                    assert!((v - 2.0 * spec[j].norm() / n as f64).abs() < 1e-9);
                }
            }
            let (lo, hi) = (b.rr[c][0], b.rr[c][1]);
            let rest = b.rr[c][2..].iter().chain(&b.hr[c]).fold(0.0f64, |m, v| m.max(*v));
            assert!(lo.min(hi) > 2.0 * rest, "leakage peak not at 0.2/0.3 Hz: {lo} {hi} {rest}");
        }
    }
}

fn pulse_clip(pulse_hz: f64, index: u64) -> (sffda_core::ingest::FrameClip, LandmarkSequence) {
    let spec = SynthSpec {
        fps: 25.0,
        duration_s: 30.0,
        ..SynthSpec::default()
    };
    let profile = ClassProfile {
        pulse_hz,
        ..ClassProfile::anxiety_free()
    };
    let c = gen_pulse_clip(&spec, &profile, index).unwrap();
    (c.clip, c.landmarks)
}

fn green_peak_bins(pulse_hz: f64, index: u64) -> Vec<usize> {
    let (clip, seq) = pulse_clip(pulse_hz, index);
    let mut peaks = Vec::new();
    for kind in [RoiKind::Nose, RoiKind::Forehead] {
        let roi = crop_roi(&clip, &seq, kind, 40).unwrap();
        for sb in subblocks(&pixel_mean(&roi).unwrap()).unwrap() {
            let b = band_features(&sb);
            let g = &b.hr[1];
            let arg = (0..g.len()).max_by(|&i, &j| g[i].total_cmp(&g[j])).unwrap();
            peaks.push(b.hr_bins.start() + arg);
        }
    }
    peaks
}

#[test]
fn synthetic_pulse_peaks_at_its_bin_in_every_subblock() {
    let peaks = green_peak_bins(1.2, 0);
    assert_eq!(peaks, vec![12; 6]);
}

#[test]
fn every_on_grid_heart_rate_is_recovered() {
    for bin in 8..=33 {
        let f = bin as f64 / 10.0;
        let peaks = green_peak_bins(f, bin as u64);
        assert!(peaks.iter().all(|&p| p == bin), "{f} Hz: {peaks:?}");
    }
}

#[test]
fn thirty_second_clip_gives_three_feature_rows() {
    let (clip, seq) = pulse_clip(1.2, 1);
    let nose = pixel_mean(&crop_roi(&clip, &seq, RoiKind::Nose, 40).unwrap()).unwrap();
    let fore = pixel_mean(&crop_roi(&clip, &seq, RoiKind::Forehead, 40).unwrap()).unwrap();
    let feat = assemble_ippg(&nose, &fore).unwrap().sequence;
    assert_eq!(feat.shape(), &[3, 198]);
    // A trailing partial window is dropped.
    let cut = |t: &PmTrace| PmTrace {
        channels: t.channels.clone().map(|c| c[..625].to_vec()),
        fps: t.fps,
    };
    assert_eq!(assemble_ippg(&cut(&nose), &cut(&fore)).unwrap().sequence.shape(), &[2, 198]);
}

#[test]
fn short_traces_are_rejected() {
    let tr = trace(499, 25.0, |_| [0.0; 3]);
    assert!(subblocks(&tr).is_err());
}

fn roi_from(frames: Vec<Tensor>, kind: RoiKind) -> RoiClip {
    let n = frames.len();
    RoiClip {
        kind,
        frames,
        valid: vec![true; n],
        fps: 25.0,
    }
}

#[test]
fn pixel_mean_matches_loop_and_is_affine() {
    let mut rng = common::rng(5);
    let frames: Vec<Tensor> = (0..6).map(|_| common::uniform(&[5, 7, 3], 0.0, 1.0, &mut rng)).collect();
    let pm = pixel_mean(&roi_from(frames.clone(), RoiKind::Nose)).unwrap();
    for (t, f) in frames.iter().enumerate() {
        for c in 0..3 {
            let mut s = 0.0;
            for y in 0..5 {
                for x in 0..7 {
                    s += f.data()[(y * 7 + x) * 3 + c];
                }
            }
            assert!((pm.channels[c][t] - s / 35.0).abs() < 1e-14);
        }
    }
    let scaled: Vec<Tensor> = frames
        .iter()
        .map(|f| Tensor::new(f.shape().to_vec(), f.data().iter().map(|v| 2.0 * v + 0.25).collect()).unwrap())
        .collect();
    let pm2 = pixel_mean(&roi_from(scaled, RoiKind::Forehead)).unwrap();
    for c in 0..3 {
        for (a, b) in pm.channels[c].iter().zip(&pm2.channels[c]) {
            assert!((2.0 * a + 0.25 - b).abs() < 1e-13);
        }
    }
    assert!(pixel_mean(&roi_from(frames, RoiKind::Eyes)).is_err());
}

/// Separable reference resampler: per-axis weight matrices.
fn reference_resize(img: &Tensor, oh: usize, ow: usize) -> Tensor {
    let (h, w) = (img.shape()[0], img.shape()[1]);
    let weights = |n_out: usize, n_in: usize| {
        let mut m = vec![vec![0.0; n_in]; n_out];
        for (o, row) in m.iter_mut().enumerate() {
            let scale = n_in as f64 / n_out as f64;
            let p = ((o as f64 + 0.5) * scale - 0.5).max(0.0).min((n_in - 1) as f64);
            let lo = p.floor() as usize;
            let hi = if lo + 1 < n_in { lo + 1 } else { lo };
            row[lo] += 1.0 - (p - lo as f64);
            row[hi] += p - lo as f64;
        }
        m
    };
    let (wy, wx) = (weights(oh, h), weights(ow, w));
    let mut out = vec![0.0; oh * ow * 3];
    for oy in 0..oh {
        for ox in 0..ow {
            for c in 0..3 {
                let mut s = 0.0;
                for y in 0..h {
                    for x in 0..w {
                        s += wy[oy][y] * wx[ox][x] * img.data()[(y * w + x) * 3 + c];
                    }
                }
                out[(oy * ow + ox) * 3 + c] = s;
            }
        }
    }
    Tensor::new(vec![oh, ow, 3], out).unwrap()
}

#[test]
fn bilinear_matches_reference_resampler() {
    let mut rng = common::rng(6);
    for (h, w, oh, ow) in [(9, 13, 40, 40), (40, 40, 17, 23), (5, 5, 5, 5), (1, 4, 3, 8)] {
        let img = common::uniform(&[h, w, 3], 0.0, 1.0, &mut rng);
        let (a, b) = (resize_bilinear(&img, oh, ow), reference_resize(&img, oh, ow));
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-9, "{h}x{w}->{oh}x{ow}");
        }
    }
}

#[test]
fn bilinear_halving_averages_checkerboard_blocks() {
    let (h, w) = (8, 6);
    let data = (0..h * w * 3).map(|i| ((i / 3 % w + i / 3 / w) % 2) as f64).collect();
    let img = Tensor::new(vec![h, w, 3], data).unwrap();
    let out = resize_bilinear(&img, h / 2, w / 2);
    assert!(out.data().iter().all(|&v| v == 0.5));
    assert_eq!(resize_bilinear(&img, h, w), img);
}

fn synthetic_sequence() -> LandmarkSequence {
    let spec = SynthSpec {
        jitter: 0.0,
        noise: 0.0,
        ..SynthSpec::default()
    };
    gen_pulse_clip(&spec, &ClassProfile::anxiety_free(), 0).unwrap().landmarks
}

#[test]
fn mouth_box_on_template_face() {
    // Mouth landmarks span x 0.38..0.62 and y 0.72..0.84 of a 32 px frame;
    // a quarter of the span is added on each side before rounding.
    let seq = synthetic_sequence();
    let b = roi_box(&seq, 0, &RoiKind::Mouth.indices(), 32, 32).unwrap();
    assert_eq!(b, PixelBox { x0: 10, y0: 22, x1: 22, y1: 28 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boxes_stay_inside_the_frame(
        pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 20),
        w in 4usize..64,
        h in 4usize..64,
    ) {
        let mut frame = vec![[0.5, 0.5, 0.0]; NUM_LANDMARKS];
        let idx = RoiKind::Mouth.indices();
        for (&i, &(x, y)) in idx.iter().zip(&pts) {
            frame[i] = [x, y, 0.0];
        }
        let seq = LandmarkSequence::new(vec![frame], vec![true], 25.0).unwrap();
        if let Some(b) = roi_box(&seq, 0, &idx, w, h) {
            prop_assert!(b.x0 < b.x1 && b.x1 <= w);
            prop_assert!(b.y0 < b.y1 && b.y1 <= h);
        }
    }

    #[test]
    fn sample_plan_uses_valid_frames_in_order(
        valid in prop::collection::vec(prop::bool::weighted(0.8), 1..120),
        t in 1usize..80,
    ) {
        prop_assume!(valid.iter().any(|&v| v));
        let plan = sample_plan(&valid, t).unwrap();
        prop_assert_eq!(plan.len(), t);
        prop_assert!(plan.iter().all(|&i| valid[i]));
        if valid.iter().all(|&v| v) {
            prop_assert!(plan.windows(2).all(|p| p[0] <= p[1]));
            prop_assert_eq!(plan[0], 0);
            if t > 1 {
                prop_assert_eq!(plan[t - 1], valid.len() - 1);
            }
        }
    }

    #[test]
    fn standardized_clip_has_target_length(m in 2usize..100, t in 1usize..70) {
        let frames: Vec<Tensor> = (0..m).map(|i| Tensor::full(&[2, 2, 3], i as f64)).collect();
        let roi = RoiClip { kind: RoiKind::Eyes, valid: vec![true; m], frames, fps: 25.0 };
        let out = standardize_time(&roi, t).unwrap();
        prop_assert_eq!(out.frames.len(), t);
        prop_assert!(out.valid.iter().all(|&v| v));
        prop_assert!((out.fps - 25.0 * t as f64 / m as f64).abs() < 1e-12);
        let firsts: Vec<f64> = out.frames.iter().map(|f| f.data()[0]).collect();
        prop_assert!(firsts.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn split_partitions_each_class(pos in 2usize..40, neg in 2usize..40, seed in 0u64..1000) {
        let m = manifest(pos, neg);
        let (tr, te) = split(&m, 0.8, seed).unwrap();
        let mut ids: Vec<String> = tr.samples.iter().chain(&te.samples).map(|s| s.id.clone()).collect();
        ids.sort();
        let mut all: Vec<String> = m.samples.iter().map(|s| s.id.clone()).collect();
        all.sort();
        prop_assert_eq!(ids, all);
        for (label, n) in [(Label::Anxiety, pos), (Label::AnxietyFree, neg)] {
            let want = ((n as f64 * 0.8).round() as usize).clamp(1, n - 1);
            prop_assert_eq!(tr.count(label), want);
            prop_assert_eq!(te.count(label), n - want);
        }
    }

    #[test]
    fn balancing_equalizes_and_keeps_the_minority(pos in 1usize..60, neg in 1usize..60, seed in 0u64..1000) {
        let m = manifest(pos, neg);
        let b = balance_classes(&m, seed).unwrap();
        let k = pos.min(neg);
        prop_assert_eq!(b.count(Label::Anxiety), k);
        prop_assert_eq!(b.count(Label::AnxietyFree), k);
        let minority = if pos <= neg { Label::Anxiety } else { Label::AnxietyFree };
        let kept: Vec<&str> = b.samples.iter().filter(|s| s.label == minority).map(|s| s.id.as_str()).collect();
        let orig: Vec<&str> = m.samples.iter().filter(|s| s.label == minority).map(|s| s.id.as_str()).collect();
        prop_assert_eq!(kept, orig);
    }
}

fn manifest(pos: usize, neg: usize) -> DatasetManifest {
    let entries = (0..pos + neg)
        .map(|i| SampleEntry {
            id: format!("s{i:03}"),
            landmarks: format!("s{i:03}.lmk").into(),
            frames: format!("s{i:03}.sfft").into(),
            label: if i < pos { Label::Anxiety } else { Label::AnxietyFree },
            fps: 25.0,
            split: None,
        })
        .collect();
    DatasetManifest::new(entries).unwrap()
}

#[test]
fn imbalance_threshold_for_41_of_217() {
    let thr = imbalance_threshold(41, 176);
    assert_eq!((thr * 1e4).round() / 1e4, 0.1889);
}
