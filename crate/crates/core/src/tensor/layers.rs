use super::{Result, Tensor, TensorError, Triple, AXES4};

/// Output range `[lo, hi)` along one axis for which `o + k - pad` indexes
/// inside an input of extent `n_in`.
#[inline]
fn valid_range(k: usize, pad: usize, n_in: usize, n_out: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k);
    let hi = (n_in + pad).saturating_sub(k).min(n_out);
    (lo, hi.max(lo))
}

struct ConvGeom {
    c: usize,
    f: usize,
    input: Triple,
    kernel: Triple,
    pad: Triple,
    out: Triple,
}

impl ConvGeom {
    fn new(input: &Tensor, weights: &Tensor, bias: &Tensor, pad: Triple) -> Result<Self> {
        input.expect_rank(4)?;
        weights.expect_rank(5)?;
        let id = input.dims();
        let wd = weights.dims();
        if wd[1] != id[0] {
            return Err(TensorError::ShapeMismatch {
                axis: "channels",
                expected: wd[1],
                actual: id[0],
            });
        }
        bias.expect_dims(&[wd[0]])?;
        let mut out = [0; 3];
        for a in 0..3 {
            let padded = id[a + 1] + 2 * pad[a];
            if padded < wd[a + 2] {
                return Err(TensorError::KernelTooLarge {
                    axis: AXES4[a + 1],
                    kernel: wd[a + 2],
                    input: padded,
                });
            }
            out[a] = padded - wd[a + 2] + 1;
        }
        Ok(Self {
            c: id[0],
            f: wd[0],
            input: [id[1], id[2], id[3]],
            kernel: [wd[2], wd[3], wd[4]],
            pad,
            out,
        })
    }

    fn out_volume(&self) -> usize {
        self.out.iter().product()
    }

    fn in_volume(&self) -> usize {
        self.input.iter().product()
    }

    /// Visits every (filter, channel, kernel offset) together with the
    /// matching contiguous output/input row segments.
    fn for_each_row(&self, mut visit: impl FnMut(usize, usize, usize, usize)) {
        let [d, h, w] = self.input;
        let [kd_n, kh_n, kw_n] = self.kernel;
        let [pd, ph, pw] = self.pad;
        let [od_n, oh_n, ow_n] = self.out;
        let (ovol, ivol) = (self.out_volume(), self.in_volume());
        for f in 0..self.f {
            for c in 0..self.c {
                for kd in 0..kd_n {
                    let (od0, od1) = valid_range(kd, pd, d, od_n);
                    for kh in 0..kh_n {
                        let (oh0, oh1) = valid_range(kh, ph, h, oh_n);
                        for kw in 0..kw_n {
                            let (ow0, ow1) = valid_range(kw, pw, w, ow_n);
                            if ow1 == ow0 {
                                continue;
                            }
                            let widx = (((f * self.c + c) * kd_n + kd) * kh_n + kh) * kw_n + kw;
                            for od in od0..od1 {
                                let idd = od + kd - pd;
                                for oh in oh0..oh1 {
                                    let ih = oh + kh - ph;
                                    let o = f * ovol + (od * oh_n + oh) * ow_n + ow0;
                                    let i = c * ivol + (idd * h + ih) * w + ow0 + kw - pw;
                                    visit(widx, o, i, ow1 - ow0);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Stride-1 zero-padded 3D cross-correlation.
///
/// `input` is `[C, D, H, W]`, `weights` is `[F, C, kd, kh, kw]`, `bias` is
/// `[F]`; the result is `[F, D', H', W']` with `D' = D + 2·pd − kd + 1`.
pub fn conv3d_forward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    padding: Triple,
) -> Result<Tensor> {
    let g = ConvGeom::new(input, weights, bias, padding)?;
    let ovol = g.out_volume();
    let mut out = vec![0.0; g.f * ovol];
    for (f, chunk) in out.chunks_mut(ovol).enumerate() {
        chunk.fill(bias.data()[f]);
    }
    let (x, w) = (input.data(), weights.data());
    g.for_each_row(|widx, o, i, len| {
        let wv = w[widx];
        for (acc, xv) in out[o..o + len].iter_mut().zip(&x[i..i + len]) {
            *acc += wv * xv;
        }
    });
    Tensor::new(vec![g.f, g.out[0], g.out[1], g.out[2]], out)
}

#[derive(Debug, Clone)]
pub struct Conv3dGrads {
    /// `None` when the caller asked to skip the input gradient.
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn conv3d_backward(
    input: &Tensor,
    weights: &Tensor,
    padding: Triple,
    upstream: &Tensor,
    want_input: bool,
) -> Result<Conv3dGrads> {
    let bias_dims = [weights.dims().first().copied().unwrap_or(1)];
    let g = ConvGeom::new(input, weights, &Tensor::zeros(&bias_dims), padding)?;
    upstream.expect_dims(&[g.f, g.out[0], g.out[1], g.out[2]])?;
    let (x, w, up) = (input.data(), weights.data(), upstream.data());

    let mut gw = vec![0.0; weights.len()];
    let mut gx = if want_input {
        vec![0.0; input.len()]
    } else {
        Vec::new()
    };
    g.for_each_row(|widx, o, i, len| {
        let urow = &up[o..o + len];
        let dot: f64 = urow.iter().zip(&x[i..i + len]).map(|(a, b)| a * b).sum();
        gw[widx] += dot;
        if want_input {
            let wv = w[widx];
            for (acc, u) in gx[i..i + len].iter_mut().zip(urow) {
                *acc += wv * u;
            }
        }
    });
    let gb: Vec<f64> = up.chunks(g.out_volume()).map(|c| c.iter().sum()).collect();
    Ok(Conv3dGrads {
        input: if want_input {
            Some(Tensor::new(input.dims().to_vec(), gx)?)
        } else {
            None
        },
        weights: Tensor::new(weights.dims().to_vec(), gw)?,
        bias: Tensor::new(vec![g.f], gb)?,
    })
}

#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub output: Tensor,
    /// Flat input index of the maximum for every output element.
    pub argmax: Vec<usize>,
}

/// Floor-mode 3D max-pooling over `[C, D, H, W]`; trailing elements that do
/// not fill a window are dropped. Ties resolve to the lowest flat index.
pub fn maxpool3d_forward(input: &Tensor, kernel: Triple, stride: Triple) -> Result<PoolOutput> {
    input.expect_rank(4)?;
    if kernel.iter().chain(&stride).any(|&v| v == 0) {
        return Err(TensorError::InvalidSpec(
            "pool kernel and stride must be >= 1".into(),
        ));
    }
    let dims = input.dims();
    let c = dims[0];
    let ext = [dims[1], dims[2], dims[3]];
    let mut out = [0; 3];
    for a in 0..3 {
        if ext[a] < kernel[a] {
            return Err(TensorError::KernelTooLarge {
                axis: AXES4[a + 1],
                kernel: kernel[a],
                input: ext[a],
            });
        }
        out[a] = (ext[a] - kernel[a]) / stride[a] + 1;
    }
    let [d, h, w] = ext;
    let x = input.data();
    let n_out = c * out.iter().product::<usize>();
    let mut values = Vec::with_capacity(n_out);
    let mut argmax = Vec::with_capacity(n_out);
    for ch in 0..c {
        for od in 0..out[0] {
            for oh in 0..out[1] {
                for ow in 0..out[2] {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = usize::MAX;
                    for kd in 0..kernel[0] {
                        for kh in 0..kernel[1] {
                            let row = ((ch * d + od * stride[0] + kd) * h + oh * stride[1] + kh) * w
                                + ow * stride[2];
                            for kw in 0..kernel[2] {
                                let v = x[row + kw];
                                if v > best || best_idx == usize::MAX {
                                    best = v;
                                    best_idx = row + kw;
                                }
                            }
                        }
                    }
                    values.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::new(vec![c, out[0], out[1], out[2]], values)?,
        argmax,
    })
}

/// Routes each upstream element to the input position that won its window.
pub fn maxpool3d_backward(
    input_dims: &[usize],
    argmax: &[usize],
    upstream: &Tensor,
) -> Result<Tensor> {
    if argmax.len() != upstream.len() {
        return Err(TensorError::ShapeMismatch {
            axis: "pool output",
            expected: argmax.len(),
            actual: upstream.len(),
        });
    }
    let mut grad = Tensor::zeros(input_dims);
    let g = grad.data_mut();
    for (&idx, &u) in argmax.iter().zip(upstream.data()) {
        g[idx] += u;
    }
    Ok(grad)
}

pub fn relu_forward(input: &Tensor) -> Tensor {
    input.map(|v| v.max(0.0))
}

pub fn relu_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    upstream.expect_dims(input.dims())?;
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &u)| if x > 0.0 { u } else { 0.0 })
        .collect();
    Tensor::new(input.dims().to_vec(), data)
}

fn linear_dims(input: &Tensor, weights: &Tensor) -> Result<(usize, usize)> {
    input.expect_rank(1)?;
    weights.expect_rank(2)?;
    let (m, n) = (weights.dims()[0], weights.dims()[1]);
    if input.len() != n {
        return Err(TensorError::ShapeMismatch {
            axis: "in_features",
            expected: n,
            actual: input.len(),
        });
    }
    Ok((m, n))
}

/// `weights · input + bias` with `weights` laid out `[m, n]`.
pub fn linear_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (m, n) = linear_dims(input, weights)?;
    bias.expect_dims(&[m])?;
    let x = input.data();
    let out = weights
        .data()
        .chunks(n)
        .zip(bias.data())
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect();
    Tensor::new(vec![m], out)
}

#[derive(Debug, Clone)]
pub struct LinearGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

pub fn linear_backward(input: &Tensor, weights: &Tensor, upstream: &Tensor) -> Result<LinearGrads> {
    let (m, n) = linear_dims(input, weights)?;
    upstream.expect_dims(&[m])?;
    let (x, w, up) = (input.data(), weights.data(), upstream.data());
    let mut gx = vec![0.0; n];
    let mut gw = Vec::with_capacity(m * n);
    for (r, &u) in up.iter().enumerate() {
        gw.extend(x.iter().map(|v| u * v));
        for (acc, wv) in gx.iter_mut().zip(&w[r * n..(r + 1) * n]) {
            *acc += u * wv;
        }
    }
    Ok(LinearGrads {
        input: Tensor::new(vec![n], gx)?,
        weights: Tensor::new(vec![m, n], gw)?,
        bias: upstream.clone(),
    })
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(logits)` against a one-hot target.
///
/// Returns the loss and its gradient with respect to the logits,
/// `softmax(logits) − one_hot`.
pub fn softmax_cross_entropy(logits: &Tensor, one_hot: &Tensor) -> Result<(f64, Tensor)> {
    logits.expect_rank(1)?;
    one_hot.expect_dims(logits.dims())?;
    let hot: Vec<usize> = one_hot
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| i)
        .collect();
    if hot.len() != 1 || one_hot.data()[hot[0]] != 1.0 {
        return Err(TensorError::Precondition(
            "target must contain exactly one 1".into(),
        ));
    }
    let l = logits.data();
    let max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = l.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    let loss = -(l[hot[0]] - max - log_sum);
    let grad = softmax(l)
        .into_iter()
        .zip(one_hot.data())
        .map(|(p, t)| p - t)
        .collect();
    Ok((loss, Tensor::new(vec![l.len()], grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn random(dims: &[usize], seed: u64) -> Tensor {
        let mut rng = seeded(seed, 0);
        let n = dims.iter().product();
        Tensor::new(dims.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    /// Straight nested-loop cross-correlation, independent of the row kernel.
    fn conv_oracle(x: &Tensor, w: &Tensor, b: &Tensor, pad: Triple) -> Tensor {
        let [c, d, h, wd] = [x.dims()[0], x.dims()[1], x.dims()[2], x.dims()[3]];
        let [f, _, kd, kh, kw] = [w.dims()[0], w.dims()[1], w.dims()[2], w.dims()[3], w.dims()[4]];
        let od = d + 2 * pad[0] - kd + 1;
        let oh = h + 2 * pad[1] - kh + 1;
        let ow = wd + 2 * pad[2] - kw + 1;
        let mut out = vec![0.0; f * od * oh * ow];
        for fi in 0..f {
            for z in 0..od {
                for y in 0..oh {
                    for xx in 0..ow {
                        let mut s = b.data()[fi];
                        for ci in 0..c {
                            for a in 0..kd {
                                for bb in 0..kh {
                                    for cc in 0..kw {
                                        let iz = z as isize + a as isize - pad[0] as isize;
                                        let iy = y as isize + bb as isize - pad[1] as isize;
                                        let ix = xx as isize + cc as isize - pad[2] as isize;
                                        if iz < 0
                                            || iy < 0
                                            || ix < 0
                                            || iz >= d as isize
                                            || iy >= h as isize
                                            || ix >= wd as isize
                                        {
                                            continue;
                                        }
                                        let xi = ((ci * d + iz as usize) * h + iy as usize) * wd
                                            + ix as usize;
                                        let wi = (((fi * c + ci) * kd + a) * kh + bb) * kw + cc;
                                        s += w.data()[wi] * x.data()[xi];
                                    }
                                }
                            }
                        }
                        out[((fi * od + z) * oh + y) * ow + xx] = s;
                    }
                }
            }
        }
        Tensor::new(vec![f, od, oh, ow], out).unwrap()
    }

    fn max_rel(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
            .fold(0.0, f64::max)
    }

    #[test]
    fn conv_matches_nested_loop_oracle() {
        for (seed, pad) in [(1, [1, 1, 1]), (2, [0, 1, 2]), (3, [0, 0, 0])] {
            let x = random(&[2, 4, 5, 6], seed);
            let w = random(&[3, 2, 3, 3, 3], seed + 10);
            let b = random(&[3], seed + 20);
            let got = conv3d_forward(&x, &w, &b, pad).unwrap();
            let want = conv_oracle(&x, &w, &b, pad);
            assert_eq!(got.dims(), want.dims());
            assert!(max_rel(got.data(), want.data()) < 1e-12);
        }
    }

    #[test]
    fn conv_all_ones_overlap_counts() {
        // 2x2x2 ones, 3x3x3 ones kernel, pad 1: every output sees the whole
        // input, so all 8 outputs (corners) equal 8.
        let x = Tensor::full(&[1, 2, 2, 2], 1.0);
        let w = Tensor::full(&[1, 1, 3, 3, 3], 1.0);
        let out = conv3d_forward(&x, &w, &Tensor::zeros(&[1]), [1, 1, 1]).unwrap();
        assert_eq!(out.dims(), &[1, 2, 2, 2]);
        assert!(out.data().iter().all(|&v| v == 8.0));

        // On a 3x3x3 input the corner sees 2^3, a face centre 2*3*3 and the
        // centre all 27.
        let x = Tensor::full(&[1, 3, 3, 3], 1.0);
        let out = conv3d_forward(&x, &w, &Tensor::zeros(&[1]), [1, 1, 1]).unwrap();
        let oracle = conv_oracle(&x, &w, &Tensor::zeros(&[1]), [1, 1, 1]);
        assert_eq!(out, oracle);
        assert_eq!(out.data()[0], 8.0);
        assert_eq!(out.data()[4], 18.0);
        assert_eq!(out.data()[13], 27.0);
    }

    #[test]
    fn conv_paper_encoder_shape() {
        let x = Tensor::zeros(&[3, 16, 112, 112]);
        let w = Tensor::zeros(&[4, 3, 3, 3, 3]);
        let out = conv3d_forward(&x, &w, &Tensor::zeros(&[4]), [1, 1, 1]).unwrap();
        assert_eq!(out.dims(), &[4, 16, 112, 112]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_shape_errors_name_axis() {
        let x = Tensor::zeros(&[2, 4, 4, 4]);
        let w = Tensor::zeros(&[1, 3, 3, 3, 3]);
        assert!(matches!(
            conv3d_forward(&x, &w, &Tensor::zeros(&[1]), [1, 1, 1]),
            Err(TensorError::ShapeMismatch { axis: "channels", .. })
        ));
        let x = Tensor::zeros(&[3, 1, 4, 4]);
        assert!(matches!(
            conv3d_forward(&x, &w, &Tensor::zeros(&[1]), [0, 1, 1]),
            Err(TensorError::KernelTooLarge { axis: "depth", .. })
        ));
    }

    #[test]
    fn conv_backward_single_output_gives_input_patch() {
        let x = random(&[2, 3, 3, 3], 4);
        let w = random(&[1, 2, 3, 3, 3], 5);
        let out = conv3d_forward(&x, &w, &Tensor::zeros(&[1]), [0, 0, 0]).unwrap();
        assert_eq!(out.len(), 1);
        let g = conv3d_backward(&x, &w, [0, 0, 0], &Tensor::full(&[1, 1, 1, 1], 1.0), true).unwrap();
        assert_eq!(g.weights.data(), x.data());
        assert_eq!(g.bias.data(), &[1.0]);
        assert_eq!(g.input.unwrap().data(), w.data());
    }

    #[test]
    fn conv_backward_zero_upstream() {
        let x = random(&[2, 3, 4, 4], 6);
        let w = random(&[2, 2, 3, 3, 3], 7);
        let g = conv3d_backward(&x, &w, [1, 1, 1], &Tensor::zeros(&[2, 3, 4, 4]), true).unwrap();
        assert!(g.weights.data().iter().all(|&v| v == 0.0));
        assert!(g.bias.data().iter().all(|&v| v == 0.0));
        assert!(g.input.unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_backward_matches_finite_differences() {
        let x = random(&[2, 3, 4, 4], 8);
        let w = random(&[2, 2, 3, 3, 3], 9);
        let b = random(&[2], 10);
        let pad = [1, 1, 1];
        let up = random(&[2, 3, 4, 4], 11);
        // Scalar objective <up, conv(x)>.
        let objective = |x: &Tensor, w: &Tensor, b: &Tensor| -> f64 {
            let y = conv3d_forward(x, w, b, pad).unwrap();
            y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
        };
        let g = conv3d_backward(&x, &w, pad, &up, true).unwrap();
        let eps = 1e-5;
        let fd = |t: &Tensor, which: usize| -> Vec<f64> {
            (0..t.len())
                .map(|i| {
                    let mut p = t.clone();
                    let mut m = t.clone();
                    p.data_mut()[i] += eps;
                    m.data_mut()[i] -= eps;
                    let (fp, fm) = match which {
                        0 => (objective(&p, &w, &b), objective(&m, &w, &b)),
                        1 => (objective(&x, &p, &b), objective(&x, &m, &b)),
                        _ => (objective(&x, &w, &p), objective(&x, &w, &m)),
                    };
                    (fp - fm) / (2.0 * eps)
                })
                .collect()
        };
        assert!(max_rel(g.input.as_ref().unwrap().data(), &fd(&x, 0)) < 1e-4);
        assert!(max_rel(g.weights.data(), &fd(&w, 1)) < 1e-4);
        assert!(max_rel(g.bias.data(), &fd(&b, 2)) < 1e-4);
    }

    #[test]
    fn pool_shapes() {
        let x = Tensor::zeros(&[4, 16, 112, 112]);
        let p = maxpool3d_forward(&x, [3, 5, 5], [3, 5, 5]).unwrap();
        assert_eq!(p.output.dims(), &[4, 5, 22, 22]);
        let x = Tensor::zeros(&[4, 5, 22, 22]);
        let p = maxpool3d_forward(&x, [2, 2, 2], [2, 2, 2]).unwrap();
        assert_eq!(p.output.dims(), &[4, 2, 11, 11]);
        assert!(matches!(
            maxpool3d_forward(&Tensor::zeros(&[1, 1, 4, 4]), [2, 2, 2], [2, 2, 2]),
            Err(TensorError::KernelTooLarge { axis: "depth", .. })
        ));
    }

    #[test]
    fn pool_constant_and_ties() {
        let x = Tensor::full(&[2, 4, 4, 4], 3.5);
        let p = maxpool3d_forward(&x, [2, 2, 2], [2, 2, 2]).unwrap();
        assert!(p.output.data().iter().all(|&v| v == 3.5));
        let g = maxpool3d_backward(x.dims(), &p.argmax, &Tensor::full(p.output.dims(), 1.0)).unwrap();
        // Lowest flat index of every 2x2x2 window is its (0,0,0) corner.
        for ch in 0..2 {
            for d in 0..4 {
                for h in 0..4 {
                    for w in 0..4 {
                        let v = g.data()[((ch * 4 + d) * 4 + h) * 4 + w];
                        let corner = d % 2 == 0 && h % 2 == 0 && w % 2 == 0;
                        assert_eq!(v, if corner { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }

    #[test]
    fn pool_increasing_input_routes_to_last() {
        let x = Tensor::new(vec![1, 2, 2, 2], (0..8).map(f64::from).collect()).unwrap();
        let p = maxpool3d_forward(&x, [2, 2, 2], [2, 2, 2]).unwrap();
        assert_eq!(p.argmax, vec![7]);
        let g = maxpool3d_backward(x.dims(), &p.argmax, &Tensor::full(&[1, 1, 1, 1], 2.0)).unwrap();
        assert_eq!(g.data()[7], 2.0);
        assert_eq!(g.data().iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn pool_backward_matches_finite_differences() {
        let x = random(&[1, 4, 4, 4], 12);
        let up = random(&[1, 2, 2, 2], 13);
        let p = maxpool3d_forward(&x, [2, 2, 2], [2, 2, 2]).unwrap();
        let g = maxpool3d_backward(x.dims(), &p.argmax, &up).unwrap();
        let obj = |x: &Tensor| -> f64 {
            let y = maxpool3d_forward(x, [2, 2, 2], [2, 2, 2]).unwrap().output;
            y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
        };
        let eps = 1e-5;
        let fd: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut a = x.clone();
                let mut b = x.clone();
                a.data_mut()[i] += eps;
                b.data_mut()[i] -= eps;
                (obj(&a) - obj(&b)) / (2.0 * eps)
            })
            .collect();
        assert!(max_rel(g.data(), &fd) < 1e-4);
    }

    #[test]
    fn cross_entropy_values() {
        let hot = Tensor::new(vec![5], vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&Tensor::zeros(&[5]), &hot).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
        assert!((grad.data()[2] - (0.2 - 1.0)).abs() < 1e-12);
        let big = hot.map(|v| v * 1e6);
        let (loss, _) = softmax_cross_entropy(&big, &hot).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(softmax_cross_entropy(&Tensor::zeros(&[4]), &hot).is_err());
        let two = Tensor::new(vec![5], vec![1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(softmax_cross_entropy(&Tensor::zeros(&[5]), &two).is_err());
    }

    #[test]
    fn cross_entropy_grad_matches_finite_differences() {
        let logits = random(&[5], 14).map(|v| 3.0 * v);
        let hot = Tensor::new(vec![5], vec![0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let (_, grad) = softmax_cross_entropy(&logits, &hot).unwrap();
        let eps = 1e-6;
        for i in 0..5 {
            let mut a = logits.clone();
            let mut b = logits.clone();
            a.data_mut()[i] += eps;
            b.data_mut()[i] -= eps;
            let fd = (softmax_cross_entropy(&a, &hot).unwrap().0
                - softmax_cross_entropy(&b, &hot).unwrap().0)
                / (2.0 * eps);
            assert!((fd - grad.data()[i]).abs() < 1e-6, "{i}: {fd} vs {}", grad.data()[i]);
        }
    }

    #[test]
    fn linear_backward_matches_finite_differences() {
        let x = random(&[6], 15);
        let w = random(&[3, 6], 16);
        let b = random(&[3], 17);
        let up = random(&[3], 18);
        let g = linear_backward(&x, &w, &up).unwrap();
        let obj = |x: &Tensor, w: &Tensor| -> f64 {
            let y = linear_forward(x, w, &b).unwrap();
            y.data().iter().zip(up.data()).map(|(a, b)| a * b).sum()
        };
        let eps = 1e-5;
        for i in 0..6 {
            let mut a = x.clone();
            let mut c = x.clone();
            a.data_mut()[i] += eps;
            c.data_mut()[i] -= eps;
            let fd = (obj(&a, &w) - obj(&c, &w)) / (2.0 * eps);
            assert!((fd - g.input.data()[i]).abs() < 1e-8);
        }
        for i in 0..18 {
            let mut a = w.clone();
            let mut c = w.clone();
            a.data_mut()[i] += eps;
            c.data_mut()[i] -= eps;
            let fd = (obj(&x, &a) - obj(&x, &c)) / (2.0 * eps);
            assert!((fd - g.weights.data()[i]).abs() < 1e-8);
        }
        assert!(linear_forward(&random(&[5], 1), &w, &b).is_err());
    }
}
