//! Forward and backward kernels for the tape primitives. Everything here
//! works on plain tensors; the graph only sequences calls.

use rayon::prelude::*;

use super::{gemm, strides, MatView, Scalar, Tensor};
use crate::error::{Error, Result};

fn dim_err<S: Scalar>(op: &'static str, a: &Tensor<S>, b: &Tensor<S>) -> Error {
    Error::Dimension {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

// ---------------------------------------------------------------------------
// matmul

pub(crate) struct MatmulPlan {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub out_shape: Vec<usize>,
    /// (a batch offset, b batch offset) for each output batch index.
    pub pairs: Vec<(usize, usize)>,
}

pub(crate) fn matmul_plan<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<MatmulPlan> {
    if a.rank() < 2 || b.rank() < 2 {
        return Err(dim_err("matmul", a, b));
    }
    let (ra, rb) = (a.rank(), b.rank());
    let (m, k) = (a.shape()[ra - 2], a.shape()[ra - 1]);
    let (k2, n) = (b.shape()[rb - 2], b.shape()[rb - 1]);
    if k != k2 {
        return Err(dim_err("matmul", a, b));
    }
    let ba = &a.shape()[..ra - 2];
    let bb = &b.shape()[..rb - 2];
    let rank = ba.len().max(bb.len());
    let pad = |s: &[usize]| -> Vec<usize> {
        let mut v = vec![1; rank - s.len()];
        v.extend_from_slice(s);
        v
    };
    let (pa, pb) = (pad(ba), pad(bb));
    let mut batch = Vec::with_capacity(rank);
    for (&x, &y) in pa.iter().zip(&pb) {
        if x != y && x != 1 && y != 1 {
            return Err(dim_err("matmul", a, b));
        }
        batch.push(x.max(y));
    }
    let (sa, sb, so) = (strides(&pa), strides(&pb), strides(&batch));
    let total: usize = batch.iter().product();
    let pairs = (0..total)
        .map(|flat| {
            let (mut oa, mut ob) = (0, 0);
            for d in 0..rank {
                let i = (flat / so[d]) % batch[d];
                if pa[d] != 1 {
                    oa += i * sa[d];
                }
                if pb[d] != 1 {
                    ob += i * sb[d];
                }
            }
            (oa * m * k, ob * k * n)
        })
        .collect();
    let mut out_shape = batch;
    out_shape.extend_from_slice(&[m, n]);
    Ok(MatmulPlan {
        m,
        k,
        n,
        out_shape,
        pairs,
    })
}

pub(crate) fn matmul<S: Scalar>(a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>> {
    let p = matmul_plan(a, b)?;
    let mut out = vec![S::zero(); p.out_shape.iter().product()];
    for (i, &(oa, ob)) in p.pairs.iter().enumerate() {
        gemm(
            S::one(),
            a.data(),
            MatView::row_major(oa, p.m, p.k, p.k),
            b.data(),
            MatView::row_major(ob, p.k, p.n, p.n),
            S::zero(),
            &mut out,
            MatView::row_major(i * p.m * p.n, p.m, p.n, p.n),
        );
    }
    Ok(Tensor::from_parts(p.out_shape, out))
}

/// Gradients of `a @ b` given the output gradient; broadcast batches are summed.
pub(crate) fn matmul_backward<S: Scalar>(
    a: &Tensor<S>,
    b: &Tensor<S>,
    grad: &Tensor<S>,
    need_a: bool,
    need_b: bool,
) -> Result<(Option<Tensor<S>>, Option<Tensor<S>>)> {
    let p = matmul_plan(a, b)?;
    let mut da = need_a.then(|| vec![S::zero(); a.numel()]);
    let mut db = need_b.then(|| vec![S::zero(); b.numel()]);
    for (i, &(oa, ob)) in p.pairs.iter().enumerate() {
        let gv = MatView::row_major(i * p.m * p.n, p.m, p.n, p.n);
        if let Some(da) = da.as_mut() {
            // dA += dC @ B^T
            gemm(
                S::one(),
                grad.data(),
                gv,
                b.data(),
                MatView::row_major(ob, p.k, p.n, p.n).t(),
                S::one(),
                da,
                MatView::row_major(oa, p.m, p.k, p.k),
            );
        }
        if let Some(db) = db.as_mut() {
            // dB += A^T @ dC
            gemm(
                S::one(),
                a.data(),
                MatView::row_major(oa, p.m, p.k, p.k).t(),
                grad.data(),
                gv,
                S::one(),
                db,
                MatView::row_major(ob, p.k, p.n, p.n),
            );
        }
    }
    Ok((
        da.map(|d| Tensor::from_parts(a.shape().to_vec(), d)),
        db.map(|d| Tensor::from_parts(b.shape().to_vec(), d)),
    ))
}

// ---------------------------------------------------------------------------
// permutation

pub(crate) fn permute<S: Scalar>(x: &Tensor<S>, axes: &[usize]) -> Result<Tensor<S>> {
    let r = x.rank();
    let mut seen = vec![false; r];
    if axes.len() != r {
        return Err(Error::Axis {
            axis: axes.len(),
            rank: r,
        });
    }
    for &a in axes {
        if a >= r || seen[a] {
            return Err(Error::Axis { axis: a, rank: r });
        }
        seen[a] = true;
    }
    let in_strides = strides(x.shape());
    let out_shape: Vec<usize> = axes.iter().map(|&a| x.shape()[a]).collect();
    let out_strides = strides(&out_shape);
    let src = x.data();
    let mut out = Vec::with_capacity(x.numel());
    for flat in 0..x.numel() {
        let mut off = 0;
        for d in 0..r {
            let i = (flat / out_strides[d]) % out_shape[d];
            off += i * in_strides[axes[d]];
        }
        out.push(src[off]);
    }
    Ok(Tensor::from_parts(out_shape, out))
}

pub(crate) fn inverse_permutation(axes: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; axes.len()];
    for (i, &a) in axes.iter().enumerate() {
        inv[a] = i;
    }
    inv
}

// ---------------------------------------------------------------------------
// elementwise with suffix broadcasting

/// Number of times `b` repeats inside `a` if `b`'s shape equals a suffix of
/// `a`'s shape (including the full shape).
pub(crate) fn suffix_repeats<S: Scalar>(
    op: &'static str,
    a: &Tensor<S>,
    b: &Tensor<S>,
) -> Result<usize> {
    let (sa, sb) = (a.shape(), b.shape());
    if sb.len() > sa.len() || sa[sa.len() - sb.len()..] != *sb {
        return Err(dim_err(op, a, b));
    }
    Ok(a.numel() / b.numel())
}

pub(crate) fn zip_broadcast<S: Scalar>(
    op: &'static str,
    a: &Tensor<S>,
    b: &Tensor<S>,
    f: impl Fn(S, S) -> S,
) -> Result<Tensor<S>> {
    suffix_repeats(op, a, b)?;
    let bd = b.data();
    let n = bd.len();
    let data = a
        .data()
        .chunks_exact(n)
        .flat_map(|chunk| chunk.iter().zip(bd).map(|(&x, &y)| f(x, y)))
        .collect();
    Ok(Tensor::from_parts(a.shape().to_vec(), data))
}

/// Sums `g` (shaped like `a`) down to `b`'s suffix shape.
pub(crate) fn reduce_to_suffix<S: Scalar>(g: &[S], b_shape: &[usize]) -> Tensor<S> {
    let n: usize = b_shape.iter().product();
    let mut out = vec![S::zero(); n];
    for chunk in g.chunks_exact(n) {
        for (o, &v) in out.iter_mut().zip(chunk) {
            *o = *o + v;
        }
    }
    Tensor::from_parts(b_shape.to_vec(), out)
}

// ---------------------------------------------------------------------------
// reductions

pub(crate) fn validate_axes(rank: usize, axes: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; rank];
    for &a in axes {
        if a >= rank || mask[a] {
            return Err(Error::Axis { axis: a, rank });
        }
        mask[a] = true;
    }
    Ok(mask)
}

/// Maps each flat input index to its flat output index after reducing `mask` axes.
fn reduce_index_map(shape: &[usize], mask: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let out_shape: Vec<usize> = shape
        .iter()
        .zip(mask)
        .filter(|(_, &m)| !m)
        .map(|(&d, _)| d)
        .collect();
    let in_strides = strides(shape);
    let out_strides_full = {
        // stride of each input axis in the output (0 for reduced axes)
        let os = strides(&out_shape);
        let mut j = 0;
        mask.iter()
            .map(|&m| {
                if m {
                    0
                } else {
                    j += 1;
                    os[j - 1]
                }
            })
            .collect::<Vec<_>>()
    };
    let numel: usize = shape.iter().product();
    let map = (0..numel)
        .map(|flat| {
            let mut o = 0;
            for d in 0..shape.len() {
                let i = (flat / in_strides[d]) % shape[d];
                o += i * out_strides_full[d];
            }
            o
        })
        .collect();
    (out_shape, map)
}

pub(crate) fn mean_axes<S: Scalar>(x: &Tensor<S>, axes: &[usize]) -> Result<Tensor<S>> {
    let mask = validate_axes(x.rank(), axes)?;
    let extent: usize = x
        .shape()
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(&d, _)| d)
        .product();
    if extent == 0 {
        return Err(Error::Shape {
            shape: x.shape().to_vec(),
            reason: "empty reduction extent".into(),
        });
    }
    // Fast path: reducing trailing axes only.
    let trailing = mask
        .iter()
        .skip_while(|&&m| !m)
        .all(|&m| m);
    let inv = S::one() / S::from_usize(extent).unwrap();
    if trailing && !axes.is_empty() {
        let out_shape: Vec<usize> = x.shape()[..x.rank() - axes.len()].to_vec();
        let data = x
            .data()
            .chunks_exact(extent)
            .map(|c| c.iter().copied().sum::<S>() * inv)
            .collect();
        return Ok(Tensor::from_parts(out_shape, data));
    }
    let (out_shape, map) = reduce_index_map(x.shape(), &mask);
    let mut out = vec![S::zero(); out_shape.iter().product::<usize>().max(1)];
    for (&v, &o) in x.data().iter().zip(&map) {
        out[o] = out[o] + v;
    }
    for v in &mut out {
        *v = *v * inv;
    }
    Ok(Tensor::from_parts(out_shape, out))
}

pub(crate) fn mean_axes_backward<S: Scalar>(
    in_shape: &[usize],
    axes: &[usize],
    grad: &Tensor<S>,
) -> Tensor<S> {
    let mask = validate_axes(in_shape.len(), axes).expect("validated in forward");
    let extent: usize = in_shape
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(&d, _)| d)
        .product();
    let inv = S::one() / S::from_usize(extent).unwrap();
    let trailing = mask.iter().skip_while(|&&m| !m).all(|&m| m);
    if trailing && !axes.is_empty() {
        let data = grad
            .data()
            .iter()
            .flat_map(|&g| std::iter::repeat_n(g * inv, extent))
            .collect();
        return Tensor::from_parts(in_shape.to_vec(), data);
    }
    let (_, map) = reduce_index_map(in_shape, &mask);
    let g = grad.data();
    Tensor::from_parts(in_shape.to_vec(), map.iter().map(|&o| g[o] * inv).collect())
}

// ---------------------------------------------------------------------------
// softmax

/// (outer, axis extent, inner) decomposition used by axis-wise kernels.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub(crate) fn softmax<S: Scalar>(x: &Tensor<S>, axis: usize) -> Result<Tensor<S>> {
    if axis >= x.rank() {
        return Err(Error::Axis {
            axis,
            rank: x.rank(),
        });
    }
    let (outer, n, inner) = split_axis(x.shape(), axis);
    let src = x.data();
    let mut out = vec![S::zero(); src.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let idx = |j: usize| base + j * inner;
            let mut max = S::neg_infinity();
            for j in 0..n {
                max = max.max(src[idx(j)]);
            }
            let mut total = S::zero();
            for j in 0..n {
                let e = (src[idx(j)] - max).exp();
                out[idx(j)] = e;
                total = total + e;
            }
            for j in 0..n {
                out[idx(j)] = out[idx(j)] / total;
            }
        }
    }
    Ok(Tensor::from_parts(x.shape().to_vec(), out))
}

pub(crate) fn softmax_backward<S: Scalar>(y: &Tensor<S>, grad: &Tensor<S>, axis: usize) -> Tensor<S> {
    let (outer, n, inner) = split_axis(y.shape(), axis);
    let (yv, gv) = (y.data(), grad.data());
    let mut out = vec![S::zero(); yv.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut dot = S::zero();
            for j in 0..n {
                let k = base + j * inner;
                dot = dot + yv[k] * gv[k];
            }
            for j in 0..n {
                let k = base + j * inner;
                out[k] = yv[k] * (gv[k] - dot);
            }
        }
    }
    Tensor::from_parts(y.shape().to_vec(), out)
}

// ---------------------------------------------------------------------------
// causal dilated 1D convolution

pub(crate) struct ConvDims {
    pub batch: usize,
    pub cin: usize,
    pub cout: usize,
    pub len: usize,
    pub ksize: usize,
}

pub(crate) fn conv_dims<S: Scalar>(
    x: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    dilation: usize,
) -> Result<ConvDims> {
    if dilation == 0 {
        return Err(Error::Config("dilation must be >= 1".into()));
    }
    if x.rank() != 3 || kernel.rank() != 3 || x.shape()[1] != kernel.shape()[1] {
        return Err(dim_err("causal_conv1d", x, kernel));
    }
    if bias.shape() != [kernel.shape()[0]] {
        return Err(dim_err("causal_conv1d", kernel, bias));
    }
    Ok(ConvDims {
        batch: x.shape()[0],
        cin: x.shape()[1],
        len: x.shape()[2],
        cout: kernel.shape()[0],
        ksize: kernel.shape()[2],
    })
}

/// `out[b,f,t] = bias[f] + sum_{c,j} kernel[f,c,j] * x[b,c,t-(K-1-j)*d]`,
/// with inputs before time 0 treated as zero.
pub(crate) fn causal_conv1d<S: Scalar>(
    x: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    dilation: usize,
) -> Result<Tensor<S>> {
    let ConvDims {
        batch,
        cin,
        cout,
        len,
        ksize,
    } = conv_dims(x, kernel, bias, dilation)?;
    let mut out = vec![S::zero(); batch * cout * len];
    let (xd, wd, bd) = (x.data(), kernel.data(), bias.data());
    out.par_chunks_mut(cout * len)
        .enumerate()
        .for_each(|(b, ob)| {
            for f in 0..cout {
                ob[f * len..(f + 1) * len].fill(bd[f]);
            }
            let xs = &xd[b * cin * len..(b + 1) * cin * len];
            for j in 0..ksize {
                let shift = (ksize - 1 - j) * dilation;
                if shift >= len {
                    continue;
                }
                let span = len - shift;
                gemm(
                    S::one(),
                    wd,
                    MatView {
                        offset: j,
                        rows: cout,
                        cols: cin,
                        row_stride: cin * ksize,
                        col_stride: ksize,
                    },
                    xs,
                    MatView::row_major(0, cin, span, len),
                    S::one(),
                    ob,
                    MatView::row_major(shift, cout, span, len),
                );
            }
        });
    Ok(Tensor::from_parts(vec![batch, cout, len], out))
}

pub(crate) struct ConvGrads<S> {
    pub x: Option<Tensor<S>>,
    pub kernel: Option<Tensor<S>>,
    pub bias: Option<Tensor<S>>,
}

pub(crate) fn causal_conv1d_backward<S: Scalar>(
    x: &Tensor<S>,
    kernel: &Tensor<S>,
    bias: &Tensor<S>,
    dilation: usize,
    grad: &Tensor<S>,
    need: [bool; 3],
) -> Result<ConvGrads<S>> {
    let ConvDims {
        batch,
        cin,
        cout,
        len,
        ksize,
    } = conv_dims(x, kernel, bias, dilation)?;
    let (xd, wd, gd) = (x.data(), kernel.data(), grad.data());
    let wsize = cout * cin * ksize;

    let dx = need[0].then(|| {
        let mut dx = vec![S::zero(); batch * cin * len];
        dx.par_chunks_mut(cin * len)
            .enumerate()
            .for_each(|(b, dxb)| {
                let gb = &gd[b * cout * len..(b + 1) * cout * len];
                for j in 0..ksize {
                    let shift = (ksize - 1 - j) * dilation;
                    if shift >= len {
                        continue;
                    }
                    let span = len - shift;
                    // dx[:, 0..span] += W_j^T @ g[:, shift..]
                    gemm(
                        S::one(),
                        wd,
                        MatView {
                            offset: j,
                            rows: cin,
                            cols: cout,
                            row_stride: ksize,
                            col_stride: cin * ksize,
                        },
                        gb,
                        MatView::row_major(shift, cout, span, len),
                        S::one(),
                        dxb,
                        MatView::row_major(0, cin, span, len),
                    );
                }
            });
        Tensor::from_parts(x.shape().to_vec(), dx)
    });

    let dw = need[1].then(|| {
        // Per-sample partials, reduced in index order for determinism.
        let partials: Vec<Vec<S>> = (0..batch)
            .into_par_iter()
            .map(|b| {
                let mut p = vec![S::zero(); wsize];
                let gb = &gd[b * cout * len..(b + 1) * cout * len];
                let xs = &xd[b * cin * len..(b + 1) * cin * len];
                for j in 0..ksize {
                    let shift = (ksize - 1 - j) * dilation;
                    if shift >= len {
                        continue;
                    }
                    let span = len - shift;
                    // dW_j += g[:, shift..] @ x[:, 0..span]^T
                    gemm(
                        S::one(),
                        gb,
                        MatView::row_major(shift, cout, span, len),
                        xs,
                        MatView::row_major(0, cin, span, len).t(),
                        S::one(),
                        &mut p,
                        MatView {
                            offset: j,
                            rows: cout,
                            cols: cin,
                            row_stride: cin * ksize,
                            col_stride: ksize,
                        },
                    );
                }
                p
            })
            .collect();
        let mut dw = vec![S::zero(); wsize];
        for p in &partials {
            for (a, &v) in dw.iter_mut().zip(p) {
                *a = *a + v;
            }
        }
        Tensor::from_parts(kernel.shape().to_vec(), dw)
    });

    let db = need[2].then(|| {
        let mut db = vec![S::zero(); cout];
        for b in 0..batch {
            for (f, acc) in db.iter_mut().enumerate() {
                let row = &gd[(b * cout + f) * len..(b * cout + f + 1) * len];
                *acc = *acc + row.iter().copied().sum::<S>();
            }
        }
        Tensor::from_parts(vec![cout], db)
    });

    Ok(ConvGrads {
        x: dx,
        kernel: dw,
        bias: db,
    })
}

// ---------------------------------------------------------------------------
// layer normalization over the last axis

pub(crate) fn layer_norm<S: Scalar>(
    x: &Tensor<S>,
    gain: &Tensor<S>,
    bias: &Tensor<S>,
    eps: f64,
) -> Result<Tensor<S>> {
    let d = *x.shape().last().ok_or_else(|| dim_err("layer_norm", x, gain))?;
    if gain.shape() != [d] || bias.shape() != [d] {
        return Err(dim_err("layer_norm", x, gain));
    }
    let eps = S::from_f64_lossy(eps);
    let inv_d = S::one() / S::from_usize(d).unwrap();
    let (g, b) = (gain.data(), bias.data());
    let mut out = Vec::with_capacity(x.numel());
    for row in x.data().chunks_exact(d) {
        let mean = row.iter().copied().sum::<S>() * inv_d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() * inv_d;
        let rstd = S::one() / (var + eps).sqrt();
        out.extend(
            row.iter()
                .enumerate()
                .map(|(i, &v)| (v - mean) * rstd * g[i] + b[i]),
        );
    }
    Ok(Tensor::from_parts(x.shape().to_vec(), out))
}

pub(crate) fn layer_norm_backward<S: Scalar>(
    x: &Tensor<S>,
    gain: &Tensor<S>,
    eps: f64,
    grad: &Tensor<S>,
) -> (Tensor<S>, Tensor<S>, Tensor<S>) {
    let d = *x.shape().last().unwrap();
    let eps = S::from_f64_lossy(eps);
    let inv_d = S::one() / S::from_usize(d).unwrap();
    let g = gain.data();
    let mut dx = Vec::with_capacity(x.numel());
    let mut dgain = vec![S::zero(); d];
    let mut dbias = vec![S::zero(); d];
    let mut xhat = vec![S::zero(); d];
    let mut dxhat = vec![S::zero(); d];
    for (row, grow) in x.data().chunks_exact(d).zip(grad.data().chunks_exact(d)) {
        let mean = row.iter().copied().sum::<S>() * inv_d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<S>() * inv_d;
        let rstd = S::one() / (var + eps).sqrt();
        let mut sum_dxhat = S::zero();
        let mut sum_dxhat_xhat = S::zero();
        for i in 0..d {
            xhat[i] = (row[i] - mean) * rstd;
            dxhat[i] = grow[i] * g[i];
            dgain[i] = dgain[i] + grow[i] * xhat[i];
            dbias[i] = dbias[i] + grow[i];
            sum_dxhat = sum_dxhat + dxhat[i];
            sum_dxhat_xhat = sum_dxhat_xhat + dxhat[i] * xhat[i];
        }
        for i in 0..d {
            dx.push(rstd * (dxhat[i] - inv_d * sum_dxhat - xhat[i] * inv_d * sum_dxhat_xhat));
        }
    }
    (
        Tensor::from_parts(x.shape().to_vec(), dx),
        Tensor::from_parts(vec![d], dgain),
        Tensor::from_parts(vec![d], dbias),
    )
}

// ---------------------------------------------------------------------------
// cross entropy on probabilities

pub(crate) const PROB_FLOOR: f64 = 1e-12;

pub(crate) fn check_labels<S: Scalar>(probs: &Tensor<S>, labels: &[usize]) -> Result<(usize, usize)> {
    if probs.rank() != 2 || probs.shape()[0] != labels.len() {
        return Err(Error::Dimension {
            op: "cross_entropy",
            lhs: probs.shape().to_vec(),
            rhs: vec![labels.len()],
        });
    }
    let (b, k) = (probs.shape()[0], probs.shape()[1]);
    if let Some(&label) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::LabelOutOfRange { label, classes: k });
    }
    Ok((b, k))
}

pub(crate) fn cross_entropy<S: Scalar>(probs: &Tensor<S>, labels: &[usize]) -> Result<Tensor<S>> {
    let (b, k) = check_labels(probs, labels)?;
    let floor = S::from_f64_lossy(PROB_FLOOR);
    let p = probs.data();
    let total: S = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| -(p[i * k + l].max(floor)).ln())
        .sum();
    Ok(Tensor::scalar(total / S::from_usize(b).unwrap()))
}

pub(crate) fn cross_entropy_backward<S: Scalar>(
    probs: &Tensor<S>,
    labels: &[usize],
    grad: S,
) -> Tensor<S> {
    let (b, k) = (probs.shape()[0], probs.shape()[1]);
    let floor = S::from_f64_lossy(PROB_FLOOR);
    let scale = grad / S::from_usize(b).unwrap();
    let p = probs.data();
    let mut out = vec![S::zero(); p.len()];
    for (i, &l) in labels.iter().enumerate() {
        let v = p[i * k + l];
        if v >= floor {
            out[i * k + l] = -scale / v;
        }
    }
    Tensor::from_parts(probs.shape().to_vec(), out)
}
