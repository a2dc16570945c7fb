//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain function that returns a
//! serializable struct, so the logic is testable natively.

use serde::Serialize;
use sffda_core::ingest::{crop_roi, Label, RoiKind};
use sffda_core::ippg::{band_features, pixel_mean, subblocks};
use sffda_core::metrics::{confusion, metrics, roc_auc, ConfusionCounts, Metrics, RocPoint};
use sffda_core::siamese::similarity_value;
use sffda_core::synth::{gen_pulse_clip, ClassProfile, SynthSpec};
use wasm_bindgen::prelude::*;

const DEMO_FPS: f64 = 25.0;
const DEMO_SECONDS: f64 = 30.0;
const ROI: usize = 40;

#[derive(Debug, Serialize)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    /// Green-channel HR-band magnitude averaged over nose and forehead subblocks.
    pub green: Vec<f64>,
    pub peak_hz: f64,
    /// Peak frequency of each subblock, nose first.
    pub subblock_peaks_hz: Vec<f64>,
}

pub fn pulse_spectrum(pulse_hz: f64, noise: f64, seed: u64) -> sffda_core::Result<Spectrum> {
    let spec = SynthSpec { seed, fps: DEMO_FPS, duration_s: DEMO_SECONDS, noise, ..SynthSpec::default() };
    let profile = ClassProfile { pulse_hz, ..ClassProfile::anxiety_free() };
    let c = gen_pulse_clip(&spec, &profile, 0)?;
    let mut sum: Vec<f64> = Vec::new();
    let mut peaks = Vec::new();
    let mut freqs = Vec::new();
    let mut blocks = 0usize;
    for kind in [RoiKind::Nose, RoiKind::Forehead] {
        let roi = crop_roi(&c.clip, &c.landmarks, kind, ROI)?;
        for sb in subblocks(&pixel_mean(&roi)?)? {
            let b = band_features(&sb);
            let g = &b.hr[1];
            if sum.is_empty() {
                sum = vec![0.0; g.len()];
                freqs = b.hr_bins.clone().map(|k| k as f64 * b.resolution_hz).collect();
            }
            sum.iter_mut().zip(g).for_each(|(s, v)| *s += v);
            peaks.push(freqs[argmax(g)]);
            blocks += 1;
        }
    }
    let green: Vec<f64> = sum.iter().map(|s| s / blocks as f64).collect();
    Ok(Spectrum { peak_hz: freqs[argmax(&green)], freqs_hz: freqs, green, subblock_peaks_hz: peaks })
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap_or(0)
}

#[derive(Debug, Serialize)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub metrics: Metrics,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
}

/// `labels` holds 1 for anxiety and 0 for anxiety-free.
pub fn evaluate(labels: &[u8], probs: &[f64], thr: f64) -> sffda_core::Result<Evaluation> {
    let labels: Vec<Label> =
        labels.iter().map(|&l| if l != 0 { Label::Anxiety } else { Label::AnxietyFree }).collect();
    let counts = confusion(&labels, probs, thr)?;
    let (curve, auc) = roc_auc(&labels, probs)?;
    Ok(Evaluation { metrics: metrics(&counts), counts, auc, roc: curve.points })
}

fn js<T: Serialize>(r: sffda_core::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// JSON `Spectrum` of a synthetic face pulsing at `pulse_hz`.
#[wasm_bindgen(js_name = pulseSpectrum)]
pub fn pulse_spectrum_js(pulse_hz: f64, noise: f64, seed: u32) -> Result<String, JsError> {
    js(pulse_spectrum(pulse_hz, noise, seed as u64))
}

/// JSON `Evaluation` of scored samples at threshold `thr`.
#[wasm_bindgen(js_name = evaluate)]
pub fn evaluate_js(labels: Vec<u8>, probs: Vec<f64>, thr: f64) -> Result<String, JsError> {
    js(evaluate(&labels, &probs, thr))
}

/// Embedding similarity in `[0, 1]`.
#[wasm_bindgen(js_name = similarity)]
pub fn similarity_js(a: Vec<f64>, b: Vec<f64>) -> Result<f64, JsError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(JsError::new("vectors must be non-empty and of equal length"));
    }
    Ok(similarity_value(&a, &b))
}
