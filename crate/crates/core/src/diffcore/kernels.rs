//! Dense kernels behind the graph ops.

use alloc::vec;
use alloc::vec::Vec;

use super::graph::Reduce;
use super::tensor::Tensor;
use crate::math;

/// `c = a·b + beta·c` where `a` is logically `m × k` and `b` is `k × n`.
///
/// With `a_t` set, `a` is stored as `k × m` (row-major) and used transposed;
/// likewise `b_t` means `b` is stored `n × k`.
#[allow(clippy::too_many_arguments)]
pub fn gemm(m: usize, k: usize, n: usize, a: &[f64], a_t: bool, b: &[f64], b_t: bool, c: &mut [f64], beta: f64) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above pin every buffer to the extent implied by the
    // dimensions and strides passed to the kernel.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `(outer, len, inner)` around `axis` for a row-major shape.
pub fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

pub fn ordered_sum(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |acc, x| acc + x)
}

pub fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for d in 0..rank {
        let da = if d + a.len() >= rank { a[d + a.len() - rank] } else { 1 };
        let db = if d + b.len() >= rank { b[d + b.len() - rank] } else { 1 };
        out[d] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// Row-major strides of `shape` aligned to `out`, zero on broadcast dims.
fn aligned_strides(shape: &[usize], out: &[usize]) -> Vec<usize> {
    let rank = out.len();
    let mut strides = vec![0; rank];
    let mut stride = 1;
    for d in (0..shape.len()).rev() {
        let od = d + rank - shape.len();
        strides[od] = if shape[d] == 1 { 0 } else { stride };
        stride *= shape[d];
    }
    strides
}

/// Calls `f(out_index, a_index, b_index)` for every output position.
fn for_each_broadcast(out: &[usize], sa: &[usize], sb: &[usize], mut f: impl FnMut(usize, usize, usize)) {
    let total: usize = out.iter().product();
    let rank = out.len();
    if rank == 0 {
        f(0, 0, 0);
        return;
    }
    let mut idx = vec![0usize; rank];
    let (mut ia, mut ib) = (0usize, 0usize);
    for o in 0..total {
        f(o, ia, ib);
        let mut d = rank;
        while d > 0 {
            d -= 1;
            idx[d] += 1;
            ia += sa[d];
            ib += sb[d];
            if idx[d] < out[d] {
                break;
            }
            ia -= sa[d] * out[d];
            ib -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

pub fn broadcast_map(a: &Tensor, b: &Tensor, out: &[usize], f: fn(f64, f64) -> f64) -> Tensor {
    let (ad, bd) = (a.data(), b.data());
    let data: Vec<f64> = if a.shape() == b.shape() {
        ad.iter().zip(bd).map(|(&x, &y)| f(x, y)).collect()
    } else if bd.len() == 1 {
        let y = bd[0];
        ad.iter().map(|&x| f(x, y)).collect()
    } else if ad.len() == 1 {
        let x = ad[0];
        bd.iter().map(|&y| f(x, y)).collect()
    } else {
        let (sa, sb) = (aligned_strides(a.shape(), out), aligned_strides(b.shape(), out));
        let mut data = vec![0.0; out.iter().product()];
        for_each_broadcast(out, &sa, &sb, |o, ia, ib| data[o] = f(ad[ia], bd[ib]));
        data
    };
    Tensor::from_parts(out.to_vec(), data)
}

/// Gradient of a broadcast binary op with respect to `a` (`for_a`) or `b`.
/// `df(g, x, y)` is the local contribution at one output position.
pub fn broadcast_grad(g: &Tensor, a: &Tensor, b: &Tensor, for_a: bool, df: fn(f64, f64, f64) -> f64) -> Tensor {
    let (ad, bd, gd) = (a.data(), b.data(), g.data());
    let target = if for_a { a } else { b };
    if a.shape() == b.shape() {
        let data = gd.iter().zip(ad.iter().zip(bd)).map(|(&g, (&x, &y))| df(g, x, y)).collect();
        return Tensor::from_parts(target.shape().to_vec(), data);
    }
    let out = g.shape();
    let (sa, sb) = (aligned_strides(a.shape(), out), aligned_strides(b.shape(), out));
    let mut acc = vec![0.0; target.len()];
    for_each_broadcast(out, &sa, &sb, |o, ia, ib| {
        let v = df(gd[o], ad[ia], bd[ib]);
        acc[if for_a { ia } else { ib }] += v;
    });
    Tensor::from_parts(target.shape().to_vec(), acc)
}

pub fn softmax(a: &Tensor, axis: usize) -> Tensor {
    let (outer, len, inner) = split_axis(a.shape(), axis);
    let x = a.data();
    let mut y = vec![0.0; x.len()];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            let at = |k: usize| base + k * inner + i;
            let mut max = f64::NEG_INFINITY;
            for k in 0..len {
                max = max.max(x[at(k)]);
            }
            let mut total = 0.0;
            for k in 0..len {
                let e = math::exp(x[at(k)] - max);
                y[at(k)] = e;
                total += e;
            }
            let inv = 1.0 / total;
            for k in 0..len {
                y[at(k)] *= inv;
            }
        }
    }
    Tensor::from_parts(a.shape().to_vec(), y)
}

pub fn softmax_grad(y: &Tensor, g: &Tensor, axis: usize) -> Tensor {
    let (outer, len, inner) = split_axis(y.shape(), axis);
    let (yd, gd) = (y.data(), g.data());
    let mut dx = vec![0.0; yd.len()];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            let at = |k: usize| base + k * inner + i;
            let mut s = 0.0;
            for k in 0..len {
                s += gd[at(k)] * yd[at(k)];
            }
            for k in 0..len {
                dx[at(k)] = yd[at(k)] * (gd[at(k)] - s);
            }
        }
    }
    Tensor::from_parts(y.shape().to_vec(), dx)
}

pub fn reduce_axis(a: &Tensor, axis: usize, kind: Reduce) -> Tensor {
    let (outer, len, inner) = split_axis(a.shape(), axis);
    let x = a.data();
    let mut out = vec![0.0; outer * inner];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| o * len * inner + k * inner + i;
            out[o * inner + i] = match kind {
                Reduce::Sum => (0..len).fold(0.0, |s, k| s + x[at(k)]),
                Reduce::Max => (0..len).fold(f64::NEG_INFINITY, |m, k| m.max(x[at(k)])),
                Reduce::Min => (0..len).fold(f64::INFINITY, |m, k| m.min(x[at(k)])),
            };
        }
    }
    let mut shape = a.shape().to_vec();
    shape.remove(axis);
    Tensor::from_parts(shape, out)
}

pub fn reduce_axis_grad(x: &Tensor, y: &Tensor, g: &Tensor, axis: usize, kind: Reduce) -> Tensor {
    let (outer, len, inner) = split_axis(x.shape(), axis);
    let (xd, yd, gd) = (x.data(), y.data(), g.data());
    let mut dx = vec![0.0; xd.len()];
    for o in 0..outer {
        for i in 0..inner {
            let at = |k: usize| o * len * inner + k * inner + i;
            let go = gd[o * inner + i];
            match kind {
                Reduce::Sum => {
                    for k in 0..len {
                        dx[at(k)] = go;
                    }
                }
                Reduce::Max | Reduce::Min => {
                    let target = yd[o * inner + i];
                    let ties = (0..len).filter(|&k| xd[at(k)] == target).count();
                    let share = go / ties as f64;
                    for k in 0..len {
                        if xd[at(k)] == target {
                            dx[at(k)] = share;
                        }
                    }
                }
            }
        }
    }
    Tensor::from_parts(x.shape().to_vec(), dx)
}

pub fn pad(a: &Tensor, axis: usize, value: f64) -> Tensor {
    let (outer, len, inner) = split_axis(a.shape(), axis);
    let x = a.data();
    let mut out = Vec::with_capacity(outer * (len + 1) * inner);
    for o in 0..outer {
        out.extend_from_slice(&x[o * len * inner..(o + 1) * len * inner]);
        out.extend(core::iter::repeat_n(value, inner));
    }
    let mut shape = a.shape().to_vec();
    shape[axis] += 1;
    Tensor::from_parts(shape, out)
}

pub fn slice(a: &Tensor, axis: usize, start: usize, len_out: usize) -> Tensor {
    let (outer, len, inner) = split_axis(a.shape(), axis);
    let x = a.data();
    let mut out = Vec::with_capacity(outer * len_out * inner);
    for o in 0..outer {
        let base = o * len * inner + start * inner;
        out.extend_from_slice(&x[base..base + len_out * inner]);
    }
    let mut shape = a.shape().to_vec();
    shape[axis] = len_out;
    Tensor::from_parts(shape, out)
}

/// Inverse of [`slice`]: places `g` into zeros of `shape` at `start`.
pub fn unslice(g: &Tensor, shape: &[usize], axis: usize, start: usize) -> Tensor {
    let (outer, len, inner) = split_axis(shape, axis);
    let len_in = g.shape()[axis];
    let mut out = vec![0.0; outer * len * inner];
    for o in 0..outer {
        let dst = o * len * inner + start * inner;
        let src = o * len_in * inner;
        out[dst..dst + len_in * inner].copy_from_slice(&g.data()[src..src + len_in * inner]);
    }
    Tensor::from_parts(shape.to_vec(), out)
}

pub fn concat(parts: &[&Tensor], axis: usize) -> Tensor {
    let first = parts[0];
    let (outer, _, inner) = split_axis(first.shape(), axis);
    let total_len: usize = parts.iter().map(|p| p.shape()[axis]).sum();
    let mut out = Vec::with_capacity(outer * total_len * inner);
    for o in 0..outer {
        for p in parts {
            let l = p.shape()[axis];
            out.extend_from_slice(&p.data()[o * l * inner..(o + 1) * l * inner]);
        }
    }
    let mut shape = first.shape().to_vec();
    shape[axis] = total_len;
    Tensor::from_parts(shape, out)
}

pub fn gather_last(a: &Tensor, index: &[Option<usize>], fill: f64) -> Tensor {
    let last = *a.shape().last().expect("rank >= 1");
    let rows = a.len() / last;
    let x = a.data();
    let mut out = Vec::with_capacity(rows * index.len());
    for r in 0..rows {
        let row = &x[r * last..(r + 1) * last];
        out.extend(index.iter().map(|i| i.map_or(fill, |i| row[i])));
    }
    let mut shape = a.shape().to_vec();
    *shape.last_mut().expect("rank >= 1") = index.len();
    Tensor::from_parts(shape, out)
}

pub fn gather_last_grad(g: &Tensor, shape: &[usize], index: &[Option<usize>]) -> Tensor {
    let last = *shape.last().expect("rank >= 1");
    let rows: usize = shape.iter().product::<usize>() / last;
    let mut out = vec![0.0; rows * last];
    let gd = g.data();
    for r in 0..rows {
        for (c, i) in index.iter().enumerate() {
            if let Some(i) = i {
                out[r * last + i] += gd[r * index.len() + c];
            }
        }
    }
    Tensor::from_parts(shape.to_vec(), out)
}
