//! Feature network: one extractor per stream plus a fused classifier head.
//!
//! Eye and mouth clips go through a five-layer 3D CNN with a temporal and
//! spatial attention block after the first convolution. Head-location and
//! iPPG sequences go through a single-layer LSTM. Each extractor yields one
//! embedding; the head concatenates them (location, eyes, mouth, ippg) and
//! maps them to an anxiety probability.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::behavior::LOCATION_DIM;
use crate::error::{Error, Result};
use crate::params::{glorot_uniform, Bound, ParamStore};
use crate::tensor::{PoolMode, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Location,
    Eyes,
    Mouth,
    Ippg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extractor {
    Cnn3d,
    Lstm,
}

impl Stream {
    pub const ALL: [Stream; 4] = [Stream::Location, Stream::Eyes, Stream::Mouth, Stream::Ippg];

    pub fn extractor(self) -> Extractor {
        match self {
            Stream::Eyes | Stream::Mouth => Extractor::Cnn3d,
            Stream::Location | Stream::Ippg => Extractor::Lstm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stream::Location => "location",
            Stream::Eyes => "eyes",
            Stream::Mouth => "mouth",
            Stream::Ippg => "ippg",
        }
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "loc" | "location" => Ok(Stream::Location),
            "eyes" | "eye" => Ok(Stream::Eyes),
            "mouth" => Ok(Stream::Mouth),
            "ippg" => Ok(Stream::Ippg),
            other => Err(Error::InvalidArgument(format!("unknown stream {other:?}"))),
        }
    }
}

/// Parses a comma-separated stream list into canonical order.
pub fn parse_streams(s: &str) -> Result<Vec<Stream>> {
    let mut v: Vec<Stream> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Stream::from_str)
        .collect::<Result<_>>()?;
    v.sort();
    v.dedup();
    if v.is_empty() {
        return Err(Error::InvalidArgument("at least one stream is required".into()));
    }
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub streams: Vec<Stream>,
    /// Standardized clip / sequence length.
    pub t: usize,
    /// Eye and mouth crop size.
    pub roi_size: usize,
    /// Output channels of conv1..conv5; the last is the CNN embedding size.
    pub widths: [usize; 5],
    /// Hidden channels of the temporal attention convolutions.
    pub attention_channels: usize,
    /// Spatial attention kernel extent (square, odd).
    pub spatial_kernel: usize,
    /// Enables the attention block (disable for the plain 3D CNN ablation).
    pub attention: bool,
    /// LSTM hidden size, also the LSTM embedding size.
    pub hidden: usize,
    pub head_hidden: usize,
    pub location_dim: usize,
    pub ippg_dim: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            streams: Stream::ALL.to_vec(),
            t: 64,
            roi_size: 40,
            widths: [8, 16, 32, 32, 64],
            attention_channels: 4,
            spatial_kernel: 7,
            attention: true,
            hidden: 64,
            head_hidden: 64,
            location_dim: LOCATION_DIM,
            ippg_dim: 198,
        }
    }
}

/// Shape and role of one stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamSpec {
    pub stream: Stream,
    pub extractor: Extractor,
    /// `[3,T,S,S]` for CNN streams; `[*, D]` (any length) for LSTM streams.
    pub input_shape: Vec<usize>,
    pub embed_dim: usize,
}

impl NetworkConfig {
    /// Small configuration for fast tests: `T=4`, 8x8 crops, halved widths.
    pub fn miniature() -> Self {
        NetworkConfig {
            t: 4,
            roi_size: 8,
            widths: [4, 8, 16, 16, 32],
            attention_channels: 2,
            spatial_kernel: 3,
            hidden: 32,
            head_hidden: 32,
            ..NetworkConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.streams.is_empty() {
            return bad("no streams configured".into());
        }
        let mut sorted = self.streams.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.streams {
            return bad("streams must be unique and in canonical order".into());
        }
        if self.t == 0 || self.t % 4 != 0 {
            return bad(format!("t = {} must be a positive multiple of 4", self.t));
        }
        if self.roi_size == 0 || self.roi_size % 8 != 0 {
            return bad(format!("roi_size = {} must be a positive multiple of 8", self.roi_size));
        }
        if self.spatial_kernel % 2 == 0 {
            return bad("spatial_kernel must be odd".into());
        }
        if self.widths.contains(&0) || self.hidden == 0 || self.head_hidden == 0 || self.attention_channels == 0 {
            return bad("layer sizes must be positive".into());
        }
        Ok(())
    }

    pub fn embed_dim(&self, s: Stream) -> usize {
        match s.extractor() {
            Extractor::Cnn3d => self.widths[4],
            Extractor::Lstm => self.hidden,
        }
    }

    pub fn fusion_dim(&self) -> usize {
        self.streams.iter().map(|&s| self.embed_dim(s)).sum()
    }

    pub fn stream_specs(&self) -> Vec<StreamSpec> {
        self.streams
            .iter()
            .map(|&s| StreamSpec {
                stream: s,
                extractor: s.extractor(),
                input_shape: match s {
                    Stream::Eyes | Stream::Mouth => vec![3, self.t, self.roi_size, self.roi_size],
                    Stream::Location => vec![self.t, self.location_dim],
                    Stream::Ippg => vec![0, self.ippg_dim],
                },
                embed_dim: self.embed_dim(s),
            })
            .collect()
    }
}

/// One sample's inputs, keyed by stream.
pub type StreamInputs = BTreeMap<Stream, Tensor>;

/// Pixel intensities and landmark coordinates live in `[0, 1]`; both are
/// shifted by this before the first layer.
pub const INPUT_CENTER: f64 = 0.5;

fn conv_init(store: &mut ParamStore, name: &str, shape: [usize; 5], rng: &mut ChaCha8Rng) {
    let vol: usize = shape[2..].iter().product();
    store.insert(
        format!("{name}.w"),
        glorot_uniform(&shape, shape[1] * vol, shape[0] * vol, rng),
    );
    store.insert(format!("{name}.b"), Tensor::zeros(&[shape[0]]));
}

fn dense_init(store: &mut ParamStore, name: &str, out: usize, inp: usize, rng: &mut ChaCha8Rng) {
    store.insert(format!("{name}.w"), glorot_uniform(&[out, inp], inp, out, rng));
    store.insert(format!("{name}.b"), Tensor::zeros(&[out]));
}

#[derive(Clone, Debug, PartialEq)]
pub struct SffNetwork {
    pub config: NetworkConfig,
}

/// Per-branch forward outputs.
#[derive(Clone, Debug)]
pub struct BranchOutput {
    pub embeddings: Vec<(Stream, Var)>,
    pub logit: Var,
    pub prob: Var,
}

impl SffNetwork {
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(SffNetwork { config })
    }

    /// Seeded Glorot-uniform weights, zero biases.
    pub fn init_params(&self, seed: u64) -> ParamStore {
        let c = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        for &s in &c.streams {
            let n = s.name();
            match s.extractor() {
                Extractor::Cnn3d => {
                    let w = c.widths;
                    let ins = [3, w[0], w[1], w[2], w[3]];
                    for i in 0..5 {
                        conv_init(&mut p, &format!("{n}.conv{}", i + 1), [w[i], ins[i], 3, 3, 3], &mut rng);
                    }
                    let a = c.attention_channels;
                    conv_init(&mut p, &format!("{n}.tatt.conv1"), [a, 2, 3, 3, 3], &mut rng);
                    conv_init(&mut p, &format!("{n}.tatt.conv2"), [a, a, 3, 3, 3], &mut rng);
                    conv_init(&mut p, &format!("{n}.tatt.conv3"), [a, a, 3, 1, 1], &mut rng);
                    conv_init(&mut p, &format!("{n}.tatt.conv4"), [1, a, 3, 1, 1], &mut rng);
                    let k = c.spatial_kernel;
                    conv_init(&mut p, &format!("{n}.satt.conv"), [1, 2, 1, k, k], &mut rng);
                }
                Extractor::Lstm => {
                    let d = match s {
                        Stream::Location => c.location_dim,
                        _ => c.ippg_dim,
                    };
                    let h = c.hidden;
                    p.insert(format!("{n}.lstm.wx"), glorot_uniform(&[4 * h, d], d, 4 * h, &mut rng));
                    p.insert(format!("{n}.lstm.wh"), glorot_uniform(&[4 * h, h], h, 4 * h, &mut rng));
                    p.insert(format!("{n}.lstm.b"), Tensor::zeros(&[4 * h]));
                }
            }
        }
        dense_init(&mut p, "head.fc1", c.head_hidden, c.fusion_dim(), &mut rng);
        dense_init(&mut p, "head.fc2", 1, c.head_hidden, &mut rng);
        p
    }

    /// Embeds and classifies one sample.
    pub fn forward(&self, g: &mut Graph, p: &Bound, inputs: &StreamInputs) -> Result<BranchOutput> {
        let embeddings = self.embed(g, p, inputs)?;
        let vars: Vec<Var> = embeddings.iter().map(|(_, v)| *v).collect();
        let (logit, prob) = fuse_and_classify(g, p, &vars, self.config.fusion_dim())?;
        Ok(BranchOutput {
            embeddings,
            logit,
            prob,
        })
    }

    pub fn embed(&self, g: &mut Graph, p: &Bound, inputs: &StreamInputs) -> Result<Vec<(Stream, Var)>> {
        self.config
            .streams
            .iter()
            .map(|&s| {
                let x = inputs
                    .get(&s)
                    .ok_or_else(|| Error::Data(format!("missing {s} stream")))?;
                Ok((s, self.embed_stream(g, p, s, x)?))
            })
            .collect()
    }

    pub fn embed_stream(&self, g: &mut Graph, p: &Bound, s: Stream, x: &Tensor) -> Result<Var> {
        let spec = self
            .config
            .stream_specs()
            .into_iter()
            .find(|sp| sp.stream == s)
            .ok_or_else(|| Error::InvalidArgument(format!("stream {s} is not configured")))?;
        match spec.extractor {
            Extractor::Cnn3d => {
                if x.shape() != spec.input_shape.as_slice() {
                    return Err(Error::shape(
                        "cnn3d input",
                        format!("{s}: expected {:?}, got {:?}", spec.input_shape, x.shape()),
                    ));
                }
                let xv = g.constant(x.map(|v| v - INPUT_CENTER));
                cnn3d_forward(g, p, s.name(), xv, self.config.attention, &mut Vec::new())
            }
            Extractor::Lstm => {
                if x.rank() != 2 || x.shape()[1] != spec.input_shape[1] {
                    return Err(Error::shape(
                        "lstm input",
                        format!("{s}: expected [T, {}], got {:?}", spec.input_shape[1], x.shape()),
                    ));
                }
                let xv = if s == Stream::Location {
                    g.constant(x.map(|v| v - INPUT_CENTER))
                } else {
                    g.constant(x.clone())
                };
                lstm_forward(g, p, s.name(), xv, self.config.hidden)
            }
        }
    }

    /// Stage output shapes of the CNN for an input of the configured size.
    pub fn cnn3d_stage_shapes(&self) -> Result<Vec<(String, Vec<usize>)>> {
        let s = *self
            .config
            .streams
            .iter()
            .find(|s| s.extractor() == Extractor::Cnn3d)
            .ok_or_else(|| Error::InvalidArgument("no CNN stream configured".into()))?;
        let params = self.init_params(0);
        let mut g = Graph::new();
        let p = params.bind(&mut g);
        let r = self.config.roi_size;
        let x = g.constant(Tensor::zeros(&[3, self.config.t, r, r]));
        let mut stages = Vec::new();
        cnn3d_forward(&mut g, &p, s.name(), x, self.config.attention, &mut stages)?;
        Ok(stages
            .into_iter()
            .map(|(n, v)| (n, g.value(v).shape().to_vec()))
            .collect())
    }
}

fn conv(g: &mut Graph, p: &Bound, name: &str, x: Var, pad: [usize; 3]) -> Result<Var> {
    let w = p.var(&format!("{name}.w"))?;
    let b = p.var(&format!("{name}.b"))?;
    g.conv3d(x, w, b, pad)
}

/// Channel mean and channel max, stacked: `[C,T,H,W] -> [2,T,H,W]`.
fn channel_pool(g: &mut Graph, x: Var) -> Result<Var> {
    let avg = g.reduce_axis(x, 0, PoolMode::Mean)?;
    let max = g.reduce_axis(x, 0, PoolMode::Max)?;
    g.concat(&[avg, max], 0)
}

/// Temporal weights `[1,T,1,1]` in `(0,1)`.
///
/// conv(3x3x3) -> ReLU -> conv(3x3x3) -> ReLU -> spatial mean ->
/// conv(3x1x1) -> conv(3x1x1) -> sigmoid, over the stacked channel-mean and
/// channel-max maps.
pub fn temporal_attention(g: &mut Graph, p: &Bound, prefix: &str, x: Var) -> Result<Var> {
    let s = g.value(x).shape().to_vec();
    let pooled = channel_pool(g, x)?;
    let a = conv(g, p, &format!("{prefix}.tatt.conv1"), pooled, [1, 1, 1])?;
    let a = g.relu(a);
    let a = conv(g, p, &format!("{prefix}.tatt.conv2"), a, [1, 1, 1])?;
    let a = g.relu(a);
    let a = g.pool3d(a, [1, s[2], s[3]], PoolMode::Mean)?;
    let a = conv(g, p, &format!("{prefix}.tatt.conv3"), a, [1, 0, 0])?;
    let a = conv(g, p, &format!("{prefix}.tatt.conv4"), a, [1, 0, 0])?;
    Ok(g.sigmoid(a))
}

/// Spatial weights `[1,T,H,W]` in `(0,1)`: one `1 x k x k` convolution over
/// the stacked channel-mean and channel-max maps, then sigmoid.
pub fn spatial_attention(g: &mut Graph, p: &Bound, prefix: &str, x: Var) -> Result<Var> {
    let name = format!("{prefix}.satt.conv");
    let k = g.value(p.var(&format!("{name}.w"))?).shape()[3];
    let pooled = channel_pool(g, x)?;
    let a = conv(g, p, &name, pooled, [0, k / 2, k / 2])?;
    Ok(g.sigmoid(a))
}

/// `X' = X * W`, `X'' = X' * W'`.
pub fn apply_attention(g: &mut Graph, p: &Bound, prefix: &str, x: Var) -> Result<Var> {
    let w = temporal_attention(g, p, prefix, x)?;
    let x1 = g.broadcast_mul(x, w)?;
    let w2 = spatial_attention(g, p, prefix, x1)?;
    g.broadcast_mul(x1, w2)
}

/// `[3,T,S,S]` clip to a `widths[4]`-dim embedding. `stages` receives the
/// output of every named stage.
pub fn cnn3d_forward(
    g: &mut Graph,
    p: &Bound,
    prefix: &str,
    x: Var,
    attention: bool,
    stages: &mut Vec<(String, Var)>,
) -> Result<Var> {
    let mut h = conv(g, p, &format!("{prefix}.conv1"), x, [1, 1, 1])?;
    h = g.relu(h);
    stages.push(("conv1".into(), h));
    if attention {
        h = apply_attention(g, p, prefix, h)?;
        stages.push(("attention".into(), h));
    }
    h = g.pool3d(h, [1, 2, 2], PoolMode::Max)?;
    stages.push(("pool1".into(), h));
    h = conv(g, p, &format!("{prefix}.conv2"), h, [1, 1, 1])?;
    h = g.relu(h);
    stages.push(("conv2".into(), h));
    h = g.pool3d(h, [2, 2, 2], PoolMode::Max)?;
    stages.push(("pool2".into(), h));
    h = conv(g, p, &format!("{prefix}.conv3"), h, [1, 1, 1])?;
    h = g.relu(h);
    stages.push(("conv3".into(), h));
    h = conv(g, p, &format!("{prefix}.conv4"), h, [1, 1, 1])?;
    h = g.relu(h);
    stages.push(("conv4".into(), h));
    h = g.pool3d(h, [2, 2, 2], PoolMode::Max)?;
    stages.push(("pool3".into(), h));
    h = conv(g, p, &format!("{prefix}.conv5"), h, [1, 1, 1])?;
    h = g.relu(h);
    stages.push(("conv5".into(), h));
    let s = g.value(h).shape().to_vec();
    h = g.pool3d(h, [s[1], s[2], s[3]], PoolMode::Mean)?;
    h = g.reshape(h, &[s[0]])?;
    stages.push(("embedding".into(), h));
    Ok(h)
}

/// LSTM weights: `wx [4H, D]`, `wh [4H, H]`, `b [4H]`, gate order
/// input, forget, candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmWeights {
    pub wx: Var,
    pub wh: Var,
    pub b: Var,
}

impl LstmWeights {
    pub fn bind(p: &Bound, prefix: &str) -> Result<Self> {
        Ok(LstmWeights {
            wx: p.var(&format!("{prefix}.lstm.wx"))?,
            wh: p.var(&format!("{prefix}.lstm.wh"))?,
            b: p.var(&format!("{prefix}.lstm.b"))?,
        })
    }
}

/// One LSTM cell step on `x [D]`, `h [H]`, `c [H]`.
pub fn lstm_step(g: &mut Graph, x: Var, h: Var, c: Var, w: LstmWeights) -> Result<(Var, Var)> {
    let (ws, hs) = (g.value(w.wx).shape().to_vec(), g.value(h).shape().to_vec());
    let hd = hs[0];
    let d = g.value(x).numel();
    if ws[0] != 4 * hd || ws[1] != d || g.value(w.wh).shape() != [4 * hd, hd] || g.value(w.b).shape() != [4 * hd] || g.value(c).shape() != [hd] {
        return Err(Error::shape(
            "lstm_step",
            format!("x [{d}], h {hs:?}, wx {ws:?} are inconsistent"),
        ));
    }
    let xc = g.reshape(x, &[d, 1])?;
    let hc = g.reshape(h, &[hd, 1])?;
    let zx = g.matmul(w.wx, xc)?;
    let zh = g.matmul(w.wh, hc)?;
    let z = g.add(zx, zh)?;
    let z = g.reshape(z, &[4 * hd])?;
    let z = g.add(z, w.b)?;
    let gate = |g: &mut Graph, k: usize| g.narrow(z, 0, k * hd, hd);
    let (zi, zf, zg, zo) = (gate(g, 0)?, gate(g, 1)?, gate(g, 2)?, gate(g, 3)?);
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let fc = g.mul(f, c)?;
    let ig = g.mul(i, cand)?;
    let c2 = g.add(fc, ig)?;
    let tc = g.tanh(c2);
    let h2 = g.mul(o, tc)?;
    Ok((h2, c2))
}

/// Runs the cell over the rows of `x [T, D]` from zero state; returns the
/// final hidden state.
pub fn lstm_forward(g: &mut Graph, p: &Bound, prefix: &str, x: Var, hidden: usize) -> Result<Var> {
    let w = LstmWeights::bind(p, prefix)?;
    let s = g.value(x).shape().to_vec();
    let mut h = g.constant(Tensor::zeros(&[hidden]));
    let mut c = g.constant(Tensor::zeros(&[hidden]));
    for t in 0..s[0] {
        let row = g.narrow(x, 0, t, 1)?;
        let row = g.reshape(row, &[s[1]])?;
        (h, c) = lstm_step(g, row, h, c, w)?;
    }
    Ok(h)
}

/// Concatenates stream embeddings, then dense -> ReLU -> dense -> sigmoid.
/// Returns `(logit, probability)`, both `[1]`.
pub fn fuse_and_classify(g: &mut Graph, p: &Bound, embeddings: &[Var], fusion_dim: usize) -> Result<(Var, Var)> {
    if embeddings.is_empty() {
        return Err(Error::Data("no stream embeddings to fuse".into()));
    }
    let z = g.concat(embeddings, 0)?;
    let n = g.value(z).numel();
    if n != fusion_dim {
        return Err(Error::shape(
            "fusion",
            format!("embeddings total {n}, head expects {fusion_dim}"),
        ));
    }
    let z = g.reshape(z, &[n, 1])?;
    let dense = |g: &mut Graph, name: &str, x: Var| -> Result<Var> {
        let y = g.matmul(p.var(&format!("head.{name}.w"))?, x)?;
        let out = g.value(y).numel();
        let y = g.reshape(y, &[out])?;
        let y = g.add(y, p.var(&format!("head.{name}.b"))?)?;
        g.reshape(y, &[out, 1])
    };
    let h = dense(g, "fc1", z)?;
    let h = g.relu(h);
    let logit = dense(g, "fc2", h)?;
    let logit = g.reshape(logit, &[1])?;
    let prob = g.sigmoid(logit);
    Ok((logit, prob))
}
