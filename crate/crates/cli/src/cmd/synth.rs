use std::path::PathBuf;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sffda_core::network::parse_streams;
use sffda_core::synth::{gen_classification_set, SynthSpec};

use super::required;
use crate::config::{resolve, usage, write_resolved};
use crate::model::ensure_out_dir;

#[derive(clap::Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Args {
    /// Output directory for clips, landmarks and manifest.toml.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    /// Samples per class.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    /// Anxiety samples, when different from --n.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    n_anxiety: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    fps: Option<f64>,
    /// Clip length in seconds.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_size: Option<usize>,
    /// Streams whose generator parameters differ between classes.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    signal_streams: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pulse_amp: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    noise: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Resolved {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub n: usize,
    pub n_anxiety: Option<usize>,
    pub fps: f64,
    pub duration: f64,
    pub frame_size: usize,
    pub signal_streams: String,
    pub pulse_amp: f64,
    pub noise: f64,
}

impl Default for Resolved {
    fn default() -> Self {
        let s = SynthSpec::default();
        Resolved {
            out: None,
            seed: 0,
            n: s.n_free,
            n_anxiety: None,
            fps: s.fps,
            duration: s.duration_s,
            frame_size: s.frame_size,
            signal_streams: "location,eyes,mouth,ippg".into(),
            pulse_amp: s.pulse_amp,
            noise: s.noise,
        }
    }
}

pub fn run(a: Args) -> Result<()> {
    let r: Resolved = resolve(&a, a.config.as_deref())?;
    let out = required(&r.out, "out")?;
    let spec = SynthSpec {
        seed: r.seed,
        n_free: r.n,
        n_anxiety: r.n_anxiety.unwrap_or(r.n),
        fps: r.fps,
        duration_s: r.duration,
        frame_size: r.frame_size,
        pulse_amp: r.pulse_amp,
        noise: r.noise,
        signal_streams: parse_streams(&r.signal_streams).map_err(|e| usage(e.to_string()))?,
        ..SynthSpec::default()
    };
    if spec.n_free == 0 || spec.n_anxiety == 0 {
        return Err(usage("both classes need at least one sample"));
    }
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let dir = ensure_out_dir(&out)?;
    let m = gen_classification_set(&spec, &dir)?;
    write_resolved(&dir, "synth", &r)?;
    println!(
        "wrote {} samples ({} anxiety-free, {} anxiety) to {}",
        m.len(),
        spec.n_free,
        spec.n_anxiety,
        dir.display()
    );
    Ok(())
}
