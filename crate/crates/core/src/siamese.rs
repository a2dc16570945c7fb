//! Twin-branch training and screening.
//!
//! Both branches of a pair run through the same [`Bound`] parameter handles
//! inside one graph, so weight sharing holds by construction. The objective
//! is `alpha * loss1 + beta * loss2`: `loss1` pulls anxiety-free pairs
//! together stream by stream and pushes mixed pairs below a cosine margin,
//! `loss2` is binary cross-entropy on the classifier head.

use std::collections::BTreeMap;

use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::ingest::Label;
use crate::network::{fuse_and_classify, BranchOutput, SffNetwork, Stream, StreamInputs};
use crate::optim::{AdamConfig, AdamState};
use crate::params::{Bound, ParamStore};
use crate::tensor::Tensor;

/// Repulsion margin on `sim` for mixed pairs.
pub const MARGIN: f64 = 0.5;
pub const PROB_CLAMP: f64 = 1e-12;
pub const DEFAULT_M_PRIME: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { alpha: 0.5, beta: 0.5 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{n} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `(cos(a, b) + 1) / 2`; 0.5 when either vector has zero norm.
pub fn similarity_value(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        warn!("similarity of a zero-norm embedding; using 0.5");
        return 0.5;
    }
    0.5 * (dot / (na * nb).sqrt()) + 0.5
}

/// Differentiable [`similarity_value`] on two `[D]` embeddings.
pub fn similarity(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let (va, vb) = (g.value(a), g.value(b));
    if va.shape() != vb.shape() {
        return Err(Error::shape(
            "similarity",
            format!("{:?} vs {:?}", va.shape(), vb.shape()),
        ));
    }
    if va.data().iter().all(|&x| x == 0.0) || vb.data().iter().all(|&x| x == 0.0) {
        warn!("similarity of a zero-norm embedding; using 0.5");
        return Ok(g.constant(Tensor::scalar(0.5)));
    }
    let ab = g.mul(a, b)?;
    let dot = g.sum(ab);
    let aa = g.mul(a, a)?;
    let na = g.sum(aa);
    let bb = g.mul(b, b)?;
    let nb = g.sum(bb);
    let nn = g.mul(na, nb)?;
    let den = g.sqrt(nn);
    let cos = g.div(dot, den)?;
    Ok(g.affine(cos, 0.5, 0.5))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    /// Both members anxiety-free.
    Similar,
    /// One member of each class.
    Comparable,
}

impl PairKind {
    pub fn of(a: Label, b: Label) -> Option<PairKind> {
        match (a, b) {
            (Label::AnxietyFree, Label::AnxietyFree) => Some(PairKind::Similar),
            (Label::Anxiety, Label::Anxiety) => None,
            _ => Some(PairKind::Comparable),
        }
    }
}

pub fn loss1_value(sims: &[f64], kind: PairKind) -> f64 {
    match kind {
        PairKind::Similar => sims.iter().map(|s| (1.0 - s).abs()).sum(),
        PairKind::Comparable => sims.iter().map(|s| (s - MARGIN).max(0.0)).sum(),
    }
}

/// Similar: `sum |1 - sim_j|`. Comparable: `sum max(0, sim_j - MARGIN)`.
pub fn loss1_pair(g: &mut Graph, sims: &[Var], kind: PairKind) -> Result<Var> {
    let mut terms = Vec::with_capacity(sims.len());
    for &s in sims {
        terms.push(match kind {
            PairKind::Similar => {
                let d = g.affine(s, -1.0, 1.0);
                g.abs(d)
            }
            PairKind::Comparable => {
                let d = g.affine(s, 1.0, -MARGIN);
                g.relu(d)
            }
        });
    }
    let all = g.concat(&terms, 0)?;
    Ok(g.sum(all))
}

fn bce_value(p: f64, y: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

pub fn loss2_value(p1: f64, y1: f64, p2: f64, y2: f64) -> f64 {
    0.5 * (bce_value(p1, y1) + bce_value(p2, y2))
}

fn bce(g: &mut Graph, p: Var, y: f64) -> Var {
    let p = g.clamp(p, PROB_CLAMP, 1.0 - PROB_CLAMP);
    let pos = g.ln(p);
    let q = g.affine(p, -1.0, 1.0);
    let neg = g.ln(q);
    let a = g.affine(pos, -y, 0.0);
    let b = g.affine(neg, -(1.0 - y), 0.0);
    g.add(a, b).expect("same shape")
}

/// Mean binary cross-entropy over the two pair members.
pub fn loss2(g: &mut Graph, p1: Var, y1: f64, p2: Var, y2: f64) -> Result<Var> {
    let a = bce(g, p1, y1);
    let b = bce(g, p2, y2);
    let s = g.add(a, b)?;
    Ok(g.affine(s, 0.5, 0.0))
}

/// One training sample with its stream features.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub label: Label,
    pub inputs: StreamInputs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplePair {
    pub first: usize,
    pub second: usize,
    pub kind: PairKind,
}

/// Half similar (rounded down), half comparable, drawn with replacement and
/// shuffled. Deterministic in `(seed, epoch)`.
pub fn sample_pairs(labels: &[Label], epoch_size: usize, seed: u64, epoch: u64) -> Result<Vec<SamplePair>> {
    let free: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::AnxietyFree).collect();
    let anx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Anxiety).collect();
    if free.is_empty() {
        return Err(Error::Data("no anxiety-free samples to pair".into()));
    }
    if anx.is_empty() {
        return Err(Error::Data("no anxiety samples to pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    let n_sim = epoch_size / 2;
    let mut pairs = Vec::with_capacity(epoch_size);
    for _ in 0..n_sim {
        pairs.push(SamplePair {
            first: free[rng.random_range(0..free.len())],
            second: free[rng.random_range(0..free.len())],
            kind: PairKind::Similar,
        });
    }
    for _ in n_sim..epoch_size {
        let f = free[rng.random_range(0..free.len())];
        let a = anx[rng.random_range(0..anx.len())];
        let (first, second) = if rng.random_bool(0.5) { (f, a) } else { (a, f) };
        pairs.push(SamplePair {
            first,
            second,
            kind: PairKind::Comparable,
        });
    }
    pairs.shuffle(&mut rng);
    Ok(pairs)
}

/// Loss terms of one pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairLosses {
    pub total: f64,
    pub loss1: f64,
    pub loss2: f64,
}

/// Both branches of the twin network. They read the same bound parameters,
/// so there is exactly one set of weights.
pub fn forward_pair(
    net: &SffNetwork,
    g: &mut Graph,
    p: &Bound,
    a: &StreamInputs,
    b: &StreamInputs,
) -> Result<(BranchOutput, BranchOutput)> {
    Ok((net.forward(g, p, a)?, net.forward(g, p, b)?))
}

/// Builds `alpha * loss1 + beta * loss2` for one pair. A term whose weight is
/// zero is left out of the graph.
pub fn total_loss(
    net: &SffNetwork,
    g: &mut Graph,
    p: &Bound,
    a: &Sample,
    b: &Sample,
    weights: LossWeights,
) -> Result<(Var, Var, Var)> {
    let kind = PairKind::of(a.label, b.label)
        .ok_or_else(|| Error::Data(format!("pair {} / {} are both anxiety samples", a.id, b.id)))?;
    let (o1, o2) = forward_pair(net, g, p, &a.inputs, &b.inputs)?;
    let l1 = if weights.alpha != 0.0 {
        let mut sims = Vec::with_capacity(o1.embeddings.len());
        for ((_, e1), (_, e2)) in o1.embeddings.iter().zip(&o2.embeddings) {
            sims.push(similarity(g, *e1, *e2)?);
        }
        loss1_pair(g, &sims, kind)?
    } else {
        g.constant(Tensor::scalar(0.0))
    };
    let l2 = if weights.beta != 0.0 {
        loss2(g, o1.prob, a.label.as_target(), o2.prob, b.label.as_target())?
    } else {
        g.constant(Tensor::scalar(0.0))
    };
    let w1 = g.affine(l1, weights.alpha, 0.0);
    let w2 = g.affine(l2, weights.beta, 0.0);
    let total = g.add(w1, w2)?;
    Ok((total, l1, l2))
}

/// Forward, backward and one Adam update on a single pair.
pub fn train_step(
    net: &SffNetwork,
    params: &mut ParamStore,
    opt: &mut AdamState,
    a: &Sample,
    b: &Sample,
    weights: LossWeights,
) -> Result<PairLosses> {
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let (total, l1, l2) = total_loss(net, &mut g, &p, a, b, weights)?;
    let losses = PairLosses {
        total: g.value(total).item(),
        loss1: g.value(l1).item(),
        loss2: g.value(l2).item(),
    };
    if !losses.total.is_finite() {
        return Err(Error::Diverged {
            epoch: 0,
            step: 0,
            detail: format!("non-finite loss on pair {} / {}: {losses:?}", a.id, b.id),
        });
    }
    let grads = g.backward(total)?.params(&g);
    if let Some((name, _)) = grads.iter().find(|(_, t)| !t.is_finite()) {
        return Err(Error::Diverged {
            epoch: 0,
            step: 0,
            detail: format!("non-finite gradient for {name}"),
        });
    }
    opt.update(params, &grads)?;
    Ok(losses)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    pub weights: LossWeights,
    pub seed: u64,
    /// Pairs per epoch; the number of training samples when unset.
    pub epoch_size: Option<usize>,
    /// Decision threshold used for the per-epoch training accuracy.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            adam: AdamConfig::default(),
            weights: LossWeights::default(),
            seed: 0,
            epoch_size: None,
            threshold: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub loss1: f64,
    pub loss2: f64,
    pub train_accuracy: f64,
}

/// Runs `cfg.epochs` epochs numbered from `first_epoch` (1-based), calling
/// `on_epoch` after each one.
pub fn train(
    net: &SffNetwork,
    params: &mut ParamStore,
    opt: &mut AdamState,
    data: &[Sample],
    cfg: &TrainConfig,
    first_epoch: usize,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    cfg.weights.validate()?;
    if first_epoch == 0 {
        return Err(Error::InvalidArgument("epochs are numbered from 1".into()));
    }
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();
    let epoch_size = cfg.epoch_size.unwrap_or(data.len());
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in first_epoch..first_epoch + cfg.epochs {
        let pairs = sample_pairs(&labels, epoch_size, cfg.seed, epoch as u64)?;
        let mut sum = PairLosses::default();
        for (step, pair) in pairs.iter().enumerate() {
            let l = train_step(net, params, opt, &data[pair.first], &data[pair.second], cfg.weights)
                .map_err(|e| match e {
                    Error::Diverged { detail, .. } => Error::Diverged { epoch, step, detail },
                    other => other,
                })?;
            sum.total += l.total;
            sum.loss1 += l.loss1;
            sum.loss2 += l.loss2;
        }
        let n = pairs.len().max(1) as f64;
        let probs = predict_probs(net, params, data)?;
        let correct = probs
            .iter()
            .zip(&labels)
            .filter(|(p, l)| (**p >= cfg.threshold) == l.is_positive())
            .count();
        let rec = EpochRecord {
            epoch,
            loss: sum.total / n,
            loss1: sum.loss1 / n,
            loss2: sum.loss2 / n,
            train_accuracy: correct as f64 / data.len().max(1) as f64,
        };
        on_epoch(&rec);
        history.push(rec);
    }
    Ok(history)
}

/// Per-stream embeddings and head probability of one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub embeddings: Vec<(Stream, Vec<f64>)>,
    pub prob: f64,
}

pub fn infer(net: &SffNetwork, params: &ParamStore, inputs: &StreamInputs) -> Result<Inference> {
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let out = net.forward(&mut g, &p, inputs)?;
    Ok(Inference {
        embeddings: out
            .embeddings
            .iter()
            .map(|(s, v)| (*s, g.value(*v).data().to_vec()))
            .collect(),
        prob: g.value(out.prob).item(),
    })
}

pub fn predict_probs(net: &SffNetwork, params: &ParamStore, data: &[Sample]) -> Result<Vec<f64>> {
    data.iter().map(|s| Ok(infer(net, params, &s.inputs)?.prob)).collect()
}

/// Head probability from precomputed embeddings.
pub fn head_prob(net: &SffNetwork, params: &ParamStore, embeddings: &[&[f64]]) -> Result<f64> {
    let mut g = Graph::new();
    let p = params.bind(&mut g);
    let vars: Vec<Var> = embeddings
        .iter()
        .map(|e| g.constant(Tensor::vector(e.to_vec())))
        .collect();
    let (_, prob) = fuse_and_classify(&mut g, &p, &vars, net.config.fusion_dim())?;
    Ok(g.value(prob).item())
}

/// `sum_j |1 - sim_j|` across matching streams.
pub fn dissimilarity(a: &[(Stream, Vec<f64>)], b: &[(Stream, Vec<f64>)]) -> Result<f64> {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Data("embeddings cover different streams".into()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|((_, x), (_, y))| (1.0 - similarity_value(x, y)).abs())
        .sum())
}

/// Anxiety-free reference embeddings used for screening.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSet {
    pub ids: Vec<String>,
    pub embeddings: Vec<Vec<(Stream, Vec<f64>)>>,
}

impl ReferenceSet {
    /// The `m_prime` anxiety-free samples the head is most confident about
    /// (lowest probability; ties keep input order).
    pub fn select(net: &SffNetwork, params: &ParamStore, train: &[Sample], m_prime: usize) -> Result<Self> {
        if m_prime == 0 {
            return Err(Error::InvalidArgument("reference set size must be positive".into()));
        }
        let mut scored = Vec::new();
        for s in train.iter().filter(|s| s.label == Label::AnxietyFree) {
            scored.push((infer(net, params, &s.inputs)?, s));
        }
        if scored.is_empty() {
            return Err(Error::Data("no anxiety-free training samples for references".into()));
        }
        if scored.len() < m_prime {
            warn!("only {} anxiety-free samples for {m_prime} references", scored.len());
        }
        scored.sort_by(|a, b| a.0.prob.total_cmp(&b.0.prob));
        scored.truncate(m_prime);
        Ok(ReferenceSet {
            ids: scored.iter().map(|(_, s)| s.id.clone()).collect(),
            embeddings: scored.into_iter().map(|(i, _)| i.embeddings).collect(),
        })
    }

    /// References from given samples, which must all be anxiety-free.
    pub fn from_samples(net: &SffNetwork, params: &ParamStore, refs: &[&Sample]) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::Data("empty reference set".into()));
        }
        let mut set = ReferenceSet {
            ids: Vec::new(),
            embeddings: Vec::new(),
        };
        for s in refs {
            if s.label != Label::AnxietyFree {
                return Err(Error::Data(format!("reference {} is not anxiety-free", s.id)));
            }
            set.ids.push(s.id.clone());
            set.embeddings.push(infer(net, params, &s.inputs)?.embeddings);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenResult {
    pub prob: f64,
    /// Mean over references of `sum_j |1 - sim_j|`.
    pub dissimilarity: f64,
    pub label: Label,
    pub threshold: f64,
}

pub fn screen(
    net: &SffNetwork,
    params: &ParamStore,
    inputs: &StreamInputs,
    refs: &ReferenceSet,
    thr: f64,
) -> Result<ScreenResult> {
    if refs.is_empty() {
        return Err(Error::Data("empty reference set".into()));
    }
    let inf = infer(net, params, inputs)?;
    let mut total = 0.0;
    for r in &refs.embeddings {
        total += dissimilarity(&inf.embeddings, r)?;
    }
    Ok(ScreenResult {
        prob: inf.prob,
        dissimilarity: total / refs.len() as f64,
        label: if inf.prob >= thr { Label::Anxiety } else { Label::AnxietyFree },
        threshold: thr,
    })
}

fn accuracy(probs: &[f64], labels: &[Label], thr: f64) -> f64 {
    let hit = probs
        .iter()
        .zip(labels)
        .filter(|(p, l)| (**p >= thr) == l.is_positive())
        .count();
    hit as f64 / labels.len() as f64
}

/// Mean accuracy drop per stream when that stream's embeddings are shuffled
/// across samples, over `n_perm` seeded permutations.
pub fn permutation_importance(
    net: &SffNetwork,
    params: &ParamStore,
    data: &[Sample],
    thr: f64,
    seed: u64,
    n_perm: usize,
) -> Result<BTreeMap<Stream, f64>> {
    if data.is_empty() || n_perm == 0 {
        return Err(Error::InvalidArgument("need samples and at least one permutation".into()));
    }
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();
    let embs: Vec<Vec<Vec<f64>>> = data
        .iter()
        .map(|s| Ok(infer(net, params, &s.inputs)?.embeddings.into_iter().map(|(_, e)| e).collect()))
        .collect::<Result<_>>()?;
    let probs_with = |col: usize, perm: &[usize]| -> Result<Vec<f64>> {
        (0..data.len())
            .map(|i| {
                let row: Vec<&[f64]> = (0..embs[i].len())
                    .map(|j| if j == col { embs[perm[i]][j].as_slice() } else { embs[i][j].as_slice() })
                    .collect();
                head_prob(net, params, &row)
            })
            .collect()
    };
    let identity: Vec<usize> = (0..data.len()).collect();
    let base = accuracy(&probs_with(usize::MAX, &identity)?, &labels, thr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BTreeMap::new();
    for (col, &stream) in net.config.streams.iter().enumerate() {
        let mut drop = 0.0;
        for _ in 0..n_perm {
            let mut perm = identity.clone();
            perm.shuffle(&mut rng);
            drop += base - accuracy(&probs_with(col, &perm)?, &labels, thr);
        }
        out.insert(stream, drop / n_perm as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn similarity_cases() {
        assert_eq!(similarity_value(&[1.0, 2.0], &[1.0, 2.0]), 1.0);
        assert_eq!(similarity_value(&[1.0, 0.0], &[0.0, 3.0]), 0.5);
        assert_eq!(similarity_value(&[1.0, 2.0], &[-1.0, -2.0]), 0.0);
        assert_eq!(similarity_value(&[0.0, 0.0], &[1.0, 2.0]), 0.5);
    }

    #[test]
    fn graph_similarity_matches_value() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::vector(vec![0.3, -1.2, 2.0]));
        let b = g.constant(Tensor::vector(vec![1.1, 0.4, -0.7]));
        let s = similarity(&mut g, a, b).unwrap();
        assert_eq!(g.value(s).item(), similarity_value(&[0.3, -1.2, 2.0], &[1.1, 0.4, -0.7]));
        let z = g.constant(Tensor::zeros(&[3]));
        let s = similarity(&mut g, a, z).unwrap();
        assert_eq!(g.value(s).item(), 0.5);
    }

    #[test]
    fn loss1_cases() {
        assert_eq!(loss1_value(&[1.0; 4], PairKind::Similar), 0.0);
        assert_eq!(loss1_value(&[0.5, 0.1, 0.3, 0.0], PairKind::Comparable), 0.0);
        assert_eq!(loss1_value(&[1.0, 0.75, 0.5, 0.25], PairKind::Similar), 1.5);
        let mut g = Graph::new();
        let sims: Vec<Var> = [1.0, 0.75, 0.5, 0.25]
            .iter()
            .map(|&s| g.constant(Tensor::scalar(s)))
            .collect();
        let l = loss1_pair(&mut g, &sims, PairKind::Similar).unwrap();
        assert_eq!(g.value(l).item(), 1.5);
        let l = loss1_pair(&mut g, &sims, PairKind::Comparable).unwrap();
        assert_eq!(g.value(l).item(), 0.75);
    }

    #[test]
    fn loss2_cases() {
        assert_abs_diff_eq!(loss2_value(0.5, 1.0, 0.5, 0.0), std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(loss2_value(0.9, 1.0, 0.2, 0.0), 0.164252033486018, epsilon = 1e-12);
        assert!(loss2_value(1.0, 1.0, 0.0, 0.0) < 1e-11);
        let mut g = Graph::new();
        let p1 = g.constant(Tensor::scalar(0.9));
        let p2 = g.constant(Tensor::scalar(0.2));
        let l = loss2(&mut g, p1, 1.0, p2, 0.0).unwrap();
        assert_abs_diff_eq!(g.value(l).item(), loss2_value(0.9, 1.0, 0.2, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn weighted_total() {
        let w = LossWeights::default();
        let l2 = loss2_value(0.9, 1.0, 0.2, 0.0);
        assert_abs_diff_eq!(w.alpha * 1.5 + w.beta * l2, 0.8322, epsilon = 1e-4);
    }

    #[test]
    fn pair_sampling() {
        let labels = [Label::AnxietyFree, Label::Anxiety, Label::AnxietyFree, Label::Anxiety];
        let pairs = sample_pairs(&labels, 16, 3, 1).unwrap();
        assert_eq!(pairs.iter().filter(|p| p.kind == PairKind::Similar).count(), 8);
        for p in &pairs {
            assert_eq!(PairKind::of(labels[p.first], labels[p.second]), Some(p.kind));
        }
        assert_eq!(pairs, sample_pairs(&labels, 16, 3, 1).unwrap());
        assert_ne!(pairs, sample_pairs(&labels, 16, 3, 2).unwrap());
        assert!(sample_pairs(&[Label::Anxiety; 3], 4, 0, 1).is_err());
        assert!(sample_pairs(&[Label::AnxietyFree; 3], 4, 0, 1).is_err());
    }

    #[test]
    fn weight_validation() {
        assert!(LossWeights { alpha: 1.5, beta: 0.0 }.validate().is_err());
        assert!(LossWeights::default().validate().is_ok());
    }
}
