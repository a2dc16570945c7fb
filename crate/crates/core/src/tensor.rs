//! Dense row-major `f64` tensors and the pure numeric kernels used by the
//! autodiff graph.
//!
//! Every kernel here is a plain function of its inputs. Parallel kernels
//! split work over independent output slices and never reorder a
//! reduction, so results are bitwise identical for any thread count.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::shape(
                "tensor",
                format!("extents must be positive, got {shape:?}"),
            ));
        }
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "tensor",
                format!("shape {shape:?} needs {n} values, got {}", data.len()),
            ));
        }
        Ok(Tensor { shape, data })
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), vec![value; n]).expect("valid shape")
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::full(shape, 0.0)
    }

    pub fn ones(shape: &[usize]) -> Self {
        Tensor::full(shape, 1.0)
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor::new(vec![data.len()], data).expect("non-empty vector")
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Value of a one-element tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        Tensor::new(shape.to_vec(), self.data.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        if self.shape != other.shape {
            return Err(Error::shape(
                op,
                format!("{:?} vs {:?}", self.shape, other.shape),
            ));
        }
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape, "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

fn dims5(t: &Tensor, op: &'static str, want: usize) -> Result<()> {
    if t.rank() != want {
        return Err(Error::shape(
            op,
            format!("expected rank {want}, got shape {:?}", t.shape()),
        ));
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn for_each_chunk(out: &mut [f64], chunk: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) {
    use rayon::prelude::*;
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
fn for_each_chunk(out: &mut [f64], chunk: usize, f: impl Fn(usize, &mut [f64])) {
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Valid output index range along one axis for kernel offset `k` and padding
/// `pad`: positions `o` with `0 <= o + k - pad < n_in`.
#[inline]
fn valid_range(n_out: usize, n_in: usize, k: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k);
    let hi = (n_in + pad).saturating_sub(k).min(n_out);
    (lo, hi.max(lo))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conv3dGeom {
    pub c_in: usize,
    pub c_out: usize,
    pub input: [usize; 3],
    pub kernel: [usize; 3],
    pub pad: [usize; 3],
    pub output: [usize; 3],
}

impl Conv3dGeom {
    pub fn new(input: &Tensor, kernel: &Tensor, bias: &Tensor, pad: [usize; 3]) -> Result<Self> {
        dims5(input, "conv3d input", 4)?;
        dims5(kernel, "conv3d kernel", 5)?;
        let (is, ks) = (input.shape(), kernel.shape());
        if ks[1] != is[0] {
            return Err(Error::shape(
                "conv3d",
                format!("kernel expects {} input channels, input has {}", ks[1], is[0]),
            ));
        }
        if bias.shape() != [ks[0]] {
            return Err(Error::shape(
                "conv3d",
                format!("bias shape {:?}, expected [{}]", bias.shape(), ks[0]),
            ));
        }
        let mut output = [0; 3];
        for a in 0..3 {
            let padded = is[a + 1] + 2 * pad[a];
            if ks[a + 2] > padded {
                return Err(Error::shape(
                    "conv3d",
                    format!(
                        "kernel extent {} exceeds padded input extent {} on axis {}",
                        ks[a + 2],
                        padded,
                        a + 1
                    ),
                ));
            }
            output[a] = padded - ks[a + 2] + 1;
        }
        Ok(Conv3dGeom {
            c_in: is[0],
            c_out: ks[0],
            input: [is[1], is[2], is[3]],
            kernel: [ks[2], ks[3], ks[4]],
            pad,
            output,
        })
    }

    fn in_plane(&self) -> usize {
        self.input.iter().product()
    }

    fn out_plane(&self) -> usize {
        self.output.iter().product()
    }

    fn k_vol(&self) -> usize {
        self.kernel.iter().product()
    }
}

/// 3D cross-correlation, stride 1, zero padding.
pub fn conv3d(input: &Tensor, kernel: &Tensor, bias: &Tensor, pad: [usize; 3]) -> Result<Tensor> {
    let g = Conv3dGeom::new(input, kernel, bias, pad)?;
    let [ti, hi, wi] = g.input;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let [pt, ph, pw] = g.pad;
    let (inp, ker, b) = (input.data(), kernel.data(), bias.data());
    let mut out = vec![0.0; g.c_out * g.out_plane()];
    for_each_chunk(&mut out, g.out_plane(), |o, plane| {
        plane.iter_mut().for_each(|v| *v = b[o]);
        for c in 0..g.c_in {
            let src = &inp[c * g.in_plane()..(c + 1) * g.in_plane()];
            let kbase = (o * g.c_in + c) * g.k_vol();
            for dt in 0..kt {
                let (t0, t1) = valid_range(to, ti, dt, pt);
                for dh in 0..kh {
                    let (h0, h1) = valid_range(ho, hi, dh, ph);
                    for dw in 0..kw {
                        let (w0, w1) = valid_range(wo, wi, dw, pw);
                        if w0 >= w1 {
                            continue;
                        }
                        let wv = ker[kbase + (dt * kh + dh) * kw + dw];
                        for t in t0..t1 {
                            let st = t + dt - pt;
                            for h in h0..h1 {
                                let sh = h + dh - ph;
                                let orow = &mut plane[(t * ho + h) * wo + w0..(t * ho + h) * wo + w1];
                                let sbase = (st * hi + sh) * wi + w0 + dw - pw;
                                let srow = &src[sbase..sbase + (w1 - w0)];
                                for (ov, sv) in orow.iter_mut().zip(srow) {
                                    *ov += wv * sv;
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    Tensor::new(vec![g.c_out, to, ho, wo], out)
}

/// Gradients of [`conv3d`] with respect to input, kernel and bias.
pub fn conv3d_backward(
    input: &Tensor,
    kernel: &Tensor,
    bias: &Tensor,
    pad: [usize; 3],
    grad_out: &Tensor,
    need_input: bool,
) -> Result<(Option<Tensor>, Tensor, Tensor)> {
    let g = Conv3dGeom::new(input, kernel, bias, pad)?;
    if grad_out.shape() != [g.c_out, g.output[0], g.output[1], g.output[2]] {
        return Err(Error::shape("conv3d backward", "gradient shape mismatch"));
    }
    let [ti, hi, wi] = g.input;
    let [kt, kh, kw] = g.kernel;
    let [to, ho, wo] = g.output;
    let [pt, ph, pw] = g.pad;
    let (inp, ker, go) = (input.data(), kernel.data(), grad_out.data());

    let mut gin = vec![0.0; if need_input { g.c_in * g.in_plane() } else { 0 }];
    for_each_chunk(&mut gin, g.in_plane(), |c, plane| {
        for o in 0..g.c_out {
            let gplane = &go[o * g.out_plane()..(o + 1) * g.out_plane()];
            let kbase = (o * g.c_in + c) * g.k_vol();
            for dt in 0..kt {
                let (t0, t1) = valid_range(to, ti, dt, pt);
                for dh in 0..kh {
                    let (h0, h1) = valid_range(ho, hi, dh, ph);
                    for dw in 0..kw {
                        let (w0, w1) = valid_range(wo, wi, dw, pw);
                        if w0 >= w1 {
                            continue;
                        }
                        let wv = ker[kbase + (dt * kh + dh) * kw + dw];
                        for t in t0..t1 {
                            let st = t + dt - pt;
                            for h in h0..h1 {
                                let sh = h + dh - ph;
                                let grow = &gplane[(t * ho + h) * wo + w0..(t * ho + h) * wo + w1];
                                let sbase = (st * hi + sh) * wi + w0 + dw - pw;
                                let irow = &mut plane[sbase..sbase + (w1 - w0)];
                                for (iv, gv) in irow.iter_mut().zip(grow) {
                                    *iv += wv * gv;
                                }
                            }
                        }
                    }
                }
            }
        }
    });

    let mut gker = vec![0.0; kernel.numel()];
    for_each_chunk(&mut gker, g.c_in * g.k_vol(), |o, kslab| {
        let gplane = &go[o * g.out_plane()..(o + 1) * g.out_plane()];
        for c in 0..g.c_in {
            let src = &inp[c * g.in_plane()..(c + 1) * g.in_plane()];
            for dt in 0..kt {
                let (t0, t1) = valid_range(to, ti, dt, pt);
                for dh in 0..kh {
                    let (h0, h1) = valid_range(ho, hi, dh, ph);
                    for dw in 0..kw {
                        let (w0, w1) = valid_range(wo, wi, dw, pw);
                        let mut acc = 0.0;
                        if w0 < w1 {
                            for t in t0..t1 {
                                let st = t + dt - pt;
                                for h in h0..h1 {
                                    let sh = h + dh - ph;
                                    let grow = &gplane[(t * ho + h) * wo + w0..(t * ho + h) * wo + w1];
                                    let sbase = (st * hi + sh) * wi + w0 + dw - pw;
                                    let srow = &src[sbase..sbase + (w1 - w0)];
                                    acc += grow.iter().zip(srow).map(|(a, b)| a * b).sum::<f64>();
                                }
                            }
                        }
                        kslab[(c * kt + dt) * kh * kw + dh * kw + dw] = acc;
                    }
                }
            }
        }
    });

    let gbias: Vec<f64> = (0..g.c_out)
        .map(|o| go[o * g.out_plane()..(o + 1) * g.out_plane()].iter().sum())
        .collect();

    let gin = if need_input {
        Some(Tensor::new(input.shape().to_vec(), gin)?)
    } else {
        None
    };
    Ok((
        gin,
        Tensor::new(kernel.shape().to_vec(), gker)?,
        Tensor::new(bias.shape().to_vec(), gbias)?,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolMode {
    Max,
    Mean,
}

/// Non-overlapping pooling over the last three axes of `[C,T,H,W]`.
///
/// Returns the pooled tensor and, for max pooling, the flat input index
/// selected for every output element (first maximum wins on ties).
pub fn pool3d(input: &Tensor, window: [usize; 3], mode: PoolMode) -> Result<(Tensor, Vec<usize>)> {
    dims5(input, "pool3d", 4)?;
    let s = input.shape();
    let (c, dims) = (s[0], [s[1], s[2], s[3]]);
    let mut out_dims = [0; 3];
    for a in 0..3 {
        if window[a] == 0 || dims[a] % window[a] != 0 {
            return Err(Error::shape(
                "pool3d",
                format!(
                    "window {:?} does not divide extents {:?}",
                    window, dims
                ),
            ));
        }
        out_dims[a] = dims[a] / window[a];
    }
    let [t, h, w] = dims;
    let [to, ho, wo] = out_dims;
    let [wt, wh, ww] = window;
    let n_win = (wt * wh * ww) as f64;
    let data = input.data();
    let n_out = c * to * ho * wo;
    let mut out = Vec::with_capacity(n_out);
    let mut arg = Vec::with_capacity(if mode == PoolMode::Max { n_out } else { 0 });
    for ci in 0..c {
        for ot in 0..to {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_i = usize::MAX;
                    let mut acc = 0.0;
                    for dt in 0..wt {
                        for dh in 0..wh {
                            for dw in 0..ww {
                                let idx = ((ci * t + ot * wt + dt) * h + oh * wh + dh) * w + ow * ww + dw;
                                let v = data[idx];
                                acc += v;
                                if v > best || best_i == usize::MAX {
                                    best = v;
                                    best_i = idx;
                                }
                            }
                        }
                    }
                    match mode {
                        PoolMode::Max => {
                            out.push(best);
                            arg.push(best_i);
                        }
                        PoolMode::Mean => out.push(acc / n_win),
                    }
                }
            }
        }
    }
    Ok((Tensor::new(vec![c, to, ho, wo], out)?, arg))
}

pub fn pool3d_backward(
    input_shape: &[usize],
    window: [usize; 3],
    mode: PoolMode,
    argmax: &[usize],
    grad_out: &Tensor,
) -> Tensor {
    let mut g = Tensor::zeros(input_shape);
    match mode {
        PoolMode::Max => {
            for (&i, &v) in argmax.iter().zip(grad_out.data()) {
                g.data[i] += v;
            }
        }
        PoolMode::Mean => {
            let [t, h, w] = [input_shape[1], input_shape[2], input_shape[3]];
            let [wt, wh, ww] = window;
            let (to, ho, wo) = (t / wt, h / wh, w / ww);
            let scale = 1.0 / (wt * wh * ww) as f64;
            for (i, gv) in g.data.iter_mut().enumerate() {
                let wi = i % w;
                let hi = (i / w) % h;
                let ti = (i / (w * h)) % t;
                let ci = i / (w * h * t);
                let o = ((ci * to + ti / wt) * ho + hi / wh) * wo + wi / ww;
                *gv = grad_out.data[o] * scale;
            }
        }
    }
    g
}

/// `[m,k] x [k,n] -> [m,n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0] {
        return Err(Error::shape(
            "matmul",
            format!("{:?} x {:?}", a.shape, b.shape),
        ));
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0; m * n];
    if n == 1 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&a.data[i * k..(i + 1) * k], &b.data);
        }
        return Tensor::new(vec![m, 1], out);
    }
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a.data[i * k + p];
            let brow = &b.data[p * n..(p + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a^T b` without materializing the transpose.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 || a.shape[0] != b.shape[0] {
        return Err(Error::shape(
            "matmul_tn",
            format!("{:?}^T x {:?}", a.shape, b.shape),
        ));
    }
    let (k, m, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0; m * n];
    for p in 0..k {
        let brow = &b.data[p * n..(p + 1) * n];
        for i in 0..m {
            let av = a.data[p * m + i];
            for (o, bv) in out[i * n..(i + 1) * n].iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// `a b^T` without materializing the transpose.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[1] {
        return Err(Error::shape(
            "matmul_nt",
            format!("{:?} x {:?}^T", a.shape, b.shape),
        ));
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[0]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = &a.data[i * k..(i + 1) * k];
        for j in 0..n {
            out[i * n + j] = dot(arow, &b.data[j * k..(j + 1) * k]);
        }
    }
    Tensor::new(vec![m, n], out)
}

pub fn transpose2(a: &Tensor) -> Tensor {
    let (m, n) = (a.shape[0], a.shape[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a.data[i * n + j];
        }
    }
    Tensor::new(vec![n, m], out).expect("transpose shape")
}

/// Maps every flat index of `target` to the flat index of `w` it reads
/// under right-aligned broadcasting. Fails unless each axis of `w` is 1 or
/// equal to the matching axis of `target`.
pub(crate) fn broadcast_index(target: &[usize], w: &[usize]) -> Result<Vec<usize>> {
    if w.len() > target.len() {
        return Err(Error::shape(
            "broadcast",
            format!("{w:?} has more axes than {target:?}"),
        ));
    }
    let offset = target.len() - w.len();
    let mut wstride = vec![0usize; target.len()];
    let mut acc = 1;
    for a in (0..w.len()).rev() {
        let (wd, td) = (w[a], target[a + offset]);
        if wd != 1 && wd != td {
            return Err(Error::shape(
                "broadcast",
                format!("{w:?} does not broadcast to {target:?}"),
            ));
        }
        wstride[a + offset] = if wd == 1 { 0 } else { acc };
        acc *= wd;
    }
    let n: usize = target.iter().product();
    let mut idx = Vec::with_capacity(n);
    let mut coord = vec![0usize; target.len()];
    for _ in 0..n {
        idx.push(coord.iter().zip(&wstride).map(|(c, s)| c * s).sum());
        for a in (0..target.len()).rev() {
            coord[a] += 1;
            if coord[a] < target[a] {
                break;
            }
            coord[a] = 0;
        }
    }
    Ok(idx)
}

/// Multiplies `x` by `w` broadcast over the axes `w` lacks or holds at 1.
pub fn broadcast_mul(x: &Tensor, w: &Tensor) -> Result<Tensor> {
    let idx = broadcast_index(x.shape(), w.shape())?;
    let data = x.data.iter().zip(&idx).map(|(v, &i)| v * w.data[i]).collect();
    Tensor::new(x.shape.clone(), data)
}

/// Splits `shape` around `axis` into (outer, axis extent, inner) counts.
pub(crate) fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub fn concat(parts: &[&Tensor], axis: usize) -> Result<Tensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::shape("concat", "no tensors"))?;
    if axis >= first.rank() {
        return Err(Error::shape("concat", format!("axis {axis} out of range")));
    }
    let mut total = 0;
    for p in parts {
        let same_rank = p.rank() == first.rank();
        let same_other = same_rank
            && p
                .shape
                .iter()
                .zip(&first.shape)
                .enumerate()
                .all(|(a, (x, y))| a == axis || x == y);
        if !same_other {
            return Err(Error::shape(
                "concat",
                format!("{:?} incompatible with {:?} on axis {axis}", p.shape, first.shape),
            ));
        }
        total += p.shape[axis];
    }
    let (outer, _, inner) = axis_split(&first.shape, axis);
    let mut out = Vec::with_capacity(outer * total * inner);
    for o in 0..outer {
        for p in parts {
            let len = p.shape[axis] * inner;
            out.extend_from_slice(&p.data[o * len..(o + 1) * len]);
        }
    }
    let mut shape = first.shape.clone();
    shape[axis] = total;
    Tensor::new(shape, out)
}

/// Slice `[start, start+len)` along `axis`.
pub fn narrow(x: &Tensor, axis: usize, start: usize, len: usize) -> Result<Tensor> {
    if axis >= x.rank() || len == 0 || start + len > x.shape[axis] {
        return Err(Error::shape(
            "narrow",
            format!("[{start}, {}) on axis {axis} of {:?}", start + len, x.shape),
        ));
    }
    let (outer, n, inner) = axis_split(&x.shape, axis);
    let mut out = Vec::with_capacity(outer * len * inner);
    for o in 0..outer {
        let base = (o * n + start) * inner;
        out.extend_from_slice(&x.data[base..base + len * inner]);
    }
    let mut shape = x.shape.clone();
    shape[axis] = len;
    Tensor::new(shape, out)
}

/// Mean or max over one axis, keeping it with extent 1.
pub fn reduce_axis(x: &Tensor, axis: usize, mode: PoolMode) -> Result<(Tensor, Vec<usize>)> {
    if axis >= x.rank() {
        return Err(Error::shape("reduce_axis", format!("axis {axis} out of range")));
    }
    let (outer, n, inner) = axis_split(&x.shape, axis);
    let mut out = Vec::with_capacity(outer * inner);
    let mut arg = Vec::new();
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| (o * n + k) * inner + i;
            match mode {
                PoolMode::Mean => {
                    out.push((0..n).map(|k| x.data[at(k)]).sum::<f64>() / n as f64);
                }
                PoolMode::Max => {
                    let mut best = at(0);
                    for k in 1..n {
                        if x.data[at(k)] > x.data[best] {
                            best = at(k);
                        }
                    }
                    out.push(x.data[best]);
                    arg.push(best);
                }
            }
        }
    }
    let mut shape = x.shape.clone();
    shape[axis] = 1;
    Ok((Tensor::new(shape, out)?, arg))
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
