#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sffda_core::ingest::Label;
use sffda_core::network::{NetworkConfig, Stream, StreamInputs};
use sffda_core::siamese::Sample;
use sffda_core::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Random inputs of the configured shapes; LSTM streams get `k` rows.
pub fn random_inputs(cfg: &NetworkConfig, k: usize, rng: &mut ChaCha8Rng) -> StreamInputs {
    cfg.streams
        .iter()
        .map(|&s| {
            let shape = match s {
                Stream::Eyes | Stream::Mouth => vec![3, cfg.t, cfg.roi_size, cfg.roi_size],
                Stream::Location => vec![cfg.t, cfg.location_dim],
                Stream::Ippg => vec![k, cfg.ippg_dim],
            };
            (s, uniform(&shape, 0.0, 1.0, rng))
        })
        .collect()
}

/// Miniature network with small LSTM input widths, for fast checks.
pub fn tiny_config() -> NetworkConfig {
    NetworkConfig {
        location_dim: 6,
        ippg_dim: 5,
        hidden: 4,
        head_hidden: 5,
        ..NetworkConfig::miniature()
    }
}

pub fn sample(id: &str, label: Label, inputs: StreamInputs) -> Sample {
    Sample {
        id: id.into(),
        label,
        inputs,
    }
}
