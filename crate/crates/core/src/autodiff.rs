//! Reverse-mode automatic differentiation over a recorded graph.
//!
//! A [`Graph`] is an append-only arena: every operation pushes a node whose
//! parents already exist, so node order is a valid topological order and
//! the backward sweep is a single reverse scan.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{self, PoolMode, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    BroadcastMul(Var, Var, Vec<usize>),
    Affine(Var, f64),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Abs(Var),
    Log(Var),
    Sqrt(Var),
    Clamp(Var, f64, f64),
    MatMul(Var, Var),
    Conv3d {
        x: Var,
        k: Var,
        b: Var,
        pad: [usize; 3],
    },
    Pool3d {
        x: Var,
        window: [usize; 3],
        mode: PoolMode,
        argmax: Vec<usize>,
    },
    Reduce {
        x: Var,
        axis: usize,
        mode: PoolMode,
        argmax: Vec<usize>,
    },
    Concat {
        parts: Vec<Var>,
        axis: usize,
    },
    Narrow {
        x: Var,
        axis: usize,
        start: usize,
    },
    Reshape(Var),
    Sum(Var),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    params: Vec<(String, Var)>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: &[Var]) -> bool {
        v.iter().any(|x| self.nodes[x.0].requires_grad)
    }

    fn unary(&mut self, x: Var, value: Tensor, op: Op) -> Var {
        let rg = self.rg(&[x]);
        self.push(value, op, rg)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// Registers a trainable leaf. Gradients are reported under `name`.
    pub fn param(&mut self, name: &str, value: Tensor) -> Var {
        let v = self.push(value, Op::Leaf, true);
        self.params.push((name.to_string(), v));
        v
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "add", |x, y| x + y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "sub", |x, y| x - y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "mul", |x, y| x * y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Mul(a, b), rg))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).zip_map(self.value(b), "div", |x, y| x / y)?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::Div(a, b), rg))
    }

    /// `x * w` with `w` broadcast over the axes it lacks or holds at 1.
    pub fn broadcast_mul(&mut self, x: Var, w: Var) -> Result<Var> {
        let idx = tensor::broadcast_index(self.value(x).shape(), self.value(w).shape())?;
        let (xv, wv) = (self.value(x), self.value(w));
        let data = xv
            .data()
            .iter()
            .zip(&idx)
            .map(|(a, &i)| a * wv.data()[i])
            .collect();
        let v = Tensor::new(xv.shape().to_vec(), data)?;
        let rg = self.rg(&[x, w]);
        Ok(self.push(v, Op::BroadcastMul(x, w, idx), rg))
    }

    /// `scale * x + shift`.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let v = self.value(x).map(|a| scale * a + shift);
        self.unary(x, v, Op::Affine(x, scale))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|a| a.max(0.0));
        self.unary(x, v, Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(tensor::sigmoid);
        self.unary(x, v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::tanh);
        self.unary(x, v, Op::Tanh(x))
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::abs);
        self.unary(x, v, Op::Abs(x))
    }

    pub fn ln(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::ln);
        self.unary(x, v, Op::Log(x))
    }

    pub fn sqrt(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::sqrt);
        self.unary(x, v, Op::Sqrt(x))
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(x).map(|a| a.clamp(lo, hi));
        self.unary(x, v, Op::Clamp(x, lo, hi))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = tensor::matmul(self.value(a), self.value(b))?;
        let rg = self.rg(&[a, b]);
        Ok(self.push(v, Op::MatMul(a, b), rg))
    }

    pub fn conv3d(&mut self, x: Var, k: Var, b: Var, pad: [usize; 3]) -> Result<Var> {
        let v = tensor::conv3d(self.value(x), self.value(k), self.value(b), pad)?;
        let rg = self.rg(&[x, k, b]);
        Ok(self.push(v, Op::Conv3d { x, k, b, pad }, rg))
    }

    pub fn pool3d(&mut self, x: Var, window: [usize; 3], mode: PoolMode) -> Result<Var> {
        let (v, argmax) = tensor::pool3d(self.value(x), window, mode)?;
        Ok(self.unary(
            x,
            v,
            Op::Pool3d {
                x,
                window,
                mode,
                argmax,
            },
        ))
    }

    pub fn reduce_axis(&mut self, x: Var, axis: usize, mode: PoolMode) -> Result<Var> {
        let (v, argmax) = tensor::reduce_axis(self.value(x), axis, mode)?;
        Ok(self.unary(
            x,
            v,
            Op::Reduce {
                x,
                axis,
                mode,
                argmax,
            },
        ))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let vals: Vec<&Tensor> = parts.iter().map(|p| self.value(*p)).collect();
        let v = tensor::concat(&vals, axis)?;
        let rg = self.rg(parts);
        Ok(self.push(
            v,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            rg,
        ))
    }

    pub fn narrow(&mut self, x: Var, axis: usize, start: usize, len: usize) -> Result<Var> {
        let v = tensor::narrow(self.value(x), axis, start, len)?;
        Ok(self.unary(x, v, Op::Narrow { x, axis, start }))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(x).reshape(shape)?;
        Ok(self.unary(x, v, Op::Reshape(x)))
    }

    /// Sum of all elements as a `[1]` tensor.
    pub fn sum(&mut self, x: Var) -> Var {
        let v = Tensor::scalar(self.value(x).sum());
        self.unary(x, v, Op::Sum(x))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).numel() != 1 {
            return Err(Error::shape(
                "backward",
                format!(
                    "loss must be scalar, got shape {:?}",
                    self.value(loss).shape()
                ),
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::ones(self.value(loss).shape()));

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if node.requires_grad {
                self.propagate(node, &g, &mut grads)?;
            }
            grads[i] = Some(g);
        }
        Ok(Gradients {
            grads,
            params: self.params.clone(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        match &mut grads[v.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) -> Result<()> {
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                self.accumulate(grads, *a, g.zip_map(bv, "mul", |x, y| x * y)?);
                self.accumulate(grads, *b, g.zip_map(av, "mul", |x, y| x * y)?);
            }
            Op::Div(a, b) => {
                let bv = self.value(*b);
                self.accumulate(grads, *a, g.zip_map(bv, "div", |x, y| x / y)?);
                let gb = g
                    .zip_map(y, "div", |x, q| x * q)?
                    .zip_map(bv, "div", |x, d| -x / d)?;
                self.accumulate(grads, *b, gb);
            }
            Op::BroadcastMul(x, w, idx) => {
                let (xv, wv) = (self.value(*x), self.value(*w));
                let gx: Vec<f64> = g
                    .data()
                    .iter()
                    .zip(idx)
                    .map(|(gv, &i)| gv * wv.data()[i])
                    .collect();
                self.accumulate(grads, *x, Tensor::new(xv.shape().to_vec(), gx)?);
                let mut gw = Tensor::zeros(wv.shape());
                for ((gv, xv), &i) in g.data().iter().zip(xv.data()).zip(idx) {
                    gw.data_mut()[i] += gv * xv;
                }
                self.accumulate(grads, *w, gw);
            }
            Op::Affine(x, scale) => self.accumulate(grads, *x, g.map(|v| v * scale)),
            Op::Relu(x) => {
                let gx = g.zip_map(self.value(*x), "relu", |gv, xv| if xv > 0.0 { gv } else { 0.0 })?;
                self.accumulate(grads, *x, gx);
            }
            Op::Sigmoid(x) => {
                let gx = g.zip_map(y, "sigmoid", |gv, s| gv * s * (1.0 - s))?;
                self.accumulate(grads, *x, gx);
            }
            Op::Tanh(x) => {
                let gx = g.zip_map(y, "tanh", |gv, t| gv * (1.0 - t * t))?;
                self.accumulate(grads, *x, gx);
            }
            Op::Abs(x) => {
                let gx = g.zip_map(self.value(*x), "abs", |gv, xv| {
                    if xv > 0.0 {
                        gv
                    } else if xv < 0.0 {
                        -gv
                    } else {
                        0.0
                    }
                })?;
                self.accumulate(grads, *x, gx);
            }
            Op::Log(x) => {
                let gx = g.zip_map(self.value(*x), "ln", |gv, xv| gv / xv)?;
                self.accumulate(grads, *x, gx);
            }
            Op::Sqrt(x) => {
                let gx = g.zip_map(y, "sqrt", |gv, r| gv * 0.5 / r)?;
                self.accumulate(grads, *x, gx);
            }
            Op::Clamp(x, lo, hi) => {
                let (lo, hi) = (*lo, *hi);
                let gx = g.zip_map(self.value(*x), "clamp", |gv, xv| {
                    if xv >= lo && xv <= hi {
                        gv
                    } else {
                        0.0
                    }
                })?;
                self.accumulate(grads, *x, gx);
            }
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.nodes[a.0].requires_grad {
                    self.accumulate(grads, *a, tensor::matmul_nt(g, bv)?);
                }
                if self.nodes[b.0].requires_grad {
                    self.accumulate(grads, *b, tensor::matmul_tn(av, g)?);
                }
            }
            Op::Conv3d { x, k, b, pad } => {
                let need_input = self.nodes[x.0].requires_grad;
                let (gx, gk, gb) = tensor::conv3d_backward(
                    self.value(*x),
                    self.value(*k),
                    self.value(*b),
                    *pad,
                    g,
                    need_input,
                )?;
                if let Some(gx) = gx {
                    self.accumulate(grads, *x, gx);
                }
                self.accumulate(grads, *k, gk);
                self.accumulate(grads, *b, gb);
            }
            Op::Pool3d {
                x,
                window,
                mode,
                argmax,
            } => {
                let gx = tensor::pool3d_backward(self.value(*x).shape(), *window, *mode, argmax, g);
                self.accumulate(grads, *x, gx);
            }
            Op::Reduce {
                x,
                axis,
                mode,
                argmax,
            } => {
                let xs = self.value(*x).shape();
                let (outer, n, inner) = tensor::axis_split(xs, *axis);
                let mut gx = Tensor::zeros(xs);
                match mode {
                    PoolMode::Max => {
                        for (&i, gv) in argmax.iter().zip(g.data()) {
                            gx.data_mut()[i] += gv;
                        }
                    }
                    PoolMode::Mean => {
                        let scale = 1.0 / n as f64;
                        for o in 0..outer {
                            for k in 0..n {
                                for i in 0..inner {
                                    gx.data_mut()[(o * n + k) * inner + i] =
                                        g.data()[o * inner + i] * scale;
                                }
                            }
                        }
                    }
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Concat { parts, axis } => {
                let mut start = 0;
                for p in parts {
                    let len = self.value(*p).shape()[*axis];
                    self.accumulate(grads, *p, tensor::narrow(g, *axis, start, len)?);
                    start += len;
                }
            }
            Op::Narrow { x, axis, start } => {
                let xs = self.value(*x).shape();
                let (outer, n, inner) = tensor::axis_split(xs, *axis);
                let len = g.shape()[*axis];
                let mut gx = Tensor::zeros(xs);
                for o in 0..outer {
                    let dst = (o * n + start) * inner;
                    gx.data_mut()[dst..dst + len * inner]
                        .copy_from_slice(&g.data()[o * len * inner..(o + 1) * len * inner]);
                }
                self.accumulate(grads, *x, gx);
            }
            Op::Reshape(x) => {
                self.accumulate(grads, *x, g.reshape(self.value(*x).shape())?);
            }
            Op::Sum(x) => {
                let gv = g.item();
                self.accumulate(grads, *x, Tensor::full(self.value(*x).shape(), gv));
            }
        }
        Ok(())
    }
}

/// Result of [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    params: Vec<(String, Var)>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of every registered parameter, keyed by name. Parameters
    /// the loss does not depend on get a zero tensor.
    pub fn params(&self, graph: &Graph) -> BTreeMap<String, Tensor> {
        let mut out: BTreeMap<String, Tensor> = BTreeMap::new();
        for (name, v) in &self.params {
            let g = self
                .get(*v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(graph.value(*v).shape()));
            match out.get_mut(name) {
                Some(acc) => acc.add_assign(&g),
                None => {
                    out.insert(name.clone(), g);
                }
            }
        }
        out
    }
}
