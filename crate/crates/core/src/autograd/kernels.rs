//! Forward and backward kernels for the differentiable operators.
//!
//! Depthwise weights are `[C, 1, k, k]`, pointwise weights `[Cout, Cin, 1, 1]`,
//! biases `[1, C, 1, 1]`. Convolutions are cross-correlations with zero padding
//! `k / 2`, so spatial size is preserved.

use crate::par::{for_each_chunk_mut, map_range};
use crate::real::Real;

use super::tensor::Tensor4;

/// Adds `w · src` shifted by `(dy, dx)` into `dst`, treating out-of-range
/// source samples as zero: `dst[y, x] += w · src[y + dy, x + dx]`.
#[inline]
fn shifted_axpy<T: Real>(dst: &mut [T], src: &[T], h: usize, w: usize, dy: isize, dx: isize, weight: T) {
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy).min(h as isize).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
    if x0 >= x1 {
        return;
    }
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let d = &mut dst[y * w + x0..y * w + x1];
        let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
        for (a, &b) in d.iter_mut().zip(s) {
            *a = *a + weight * b;
        }
    }
}

/// `Σ dst[y, x] · src[y + dy, x + dx]` over the overlapping region.
#[inline]
fn shifted_dot<T: Real>(a: &[T], src: &[T], h: usize, w: usize, dy: isize, dx: isize) -> T {
    let y0 = (-dy).max(0) as usize;
    let y1 = (h as isize - dy).min(h as isize).max(0) as usize;
    let x0 = (-dx).max(0) as usize;
    let x1 = (w as isize - dx).min(w as isize).max(0) as usize;
    let mut acc = T::zero();
    if x0 >= x1 {
        return acc;
    }
    for y in y0..y1 {
        let sy = (y as isize + dy) as usize;
        let d = &a[y * w + x0..y * w + x1];
        let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
        for (&p, &q) in d.iter().zip(s) {
            acc = acc + p * q;
        }
    }
    acc
}

pub fn depthwise_forward<T: Real>(x: &Tensor4<T>, w: &Tensor4<T>, b: &Tensor4<T>) -> Tensor4<T> {
    let [_, c, h, wd] = x.dims();
    let k = w.dims()[2];
    let pad = (k / 2) as isize;
    let mut out = Tensor4::zeros(x.dims());
    for_each_chunk_mut(out.data_mut(), h * wd, |plane, dst| {
        let ch = plane % c;
        dst.fill(b.data()[ch]);
        let src = &x.data()[plane * h * wd..(plane + 1) * h * wd];
        let taps = &w.data()[ch * k * k..(ch + 1) * k * k];
        for i in 0..k {
            for j in 0..k {
                shifted_axpy(dst, src, h, wd, i as isize - pad, j as isize - pad, taps[i * k + j]);
            }
        }
    });
    out
}

/// Returns `(dx, dw, db)`.
pub fn depthwise_backward<T: Real>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    dout: &Tensor4<T>,
) -> (Tensor4<T>, Tensor4<T>, Tensor4<T>) {
    let [bn, c, h, wd] = x.dims();
    let k = w.dims()[2];
    let pad = (k / 2) as isize;
    let n = h * wd;

    // dx: correlation of dout with the flipped kernel
    let mut dx = Tensor4::zeros(x.dims());
    for_each_chunk_mut(dx.data_mut(), n, |plane, dst| {
        let ch = plane % c;
        let g = &dout.data()[plane * n..(plane + 1) * n];
        let taps = &w.data()[ch * k * k..(ch + 1) * k * k];
        for i in 0..k {
            for j in 0..k {
                shifted_axpy(dst, g, h, wd, pad - i as isize, pad - j as isize, taps[i * k + j]);
            }
        }
    });

    let per_channel: Vec<(Vec<T>, T)> = map_range(c, |ch| {
        let mut dw = vec![T::zero(); k * k];
        let mut db = T::zero();
        for bi in 0..bn {
            let plane = bi * c + ch;
            let g = &dout.data()[plane * n..(plane + 1) * n];
            let src = &x.data()[plane * n..(plane + 1) * n];
            for i in 0..k {
                for j in 0..k {
                    dw[i * k + j] = dw[i * k + j] + shifted_dot(g, src, h, wd, i as isize - pad, j as isize - pad);
                }
            }
            db = db + g.iter().copied().sum::<T>();
        }
        (dw, db)
    });
    let mut dw = Tensor4::zeros(w.dims());
    let mut db = Tensor4::zeros([1, c, 1, 1]);
    for (ch, (g, s)) in per_channel.into_iter().enumerate() {
        dw.data_mut()[ch * k * k..(ch + 1) * k * k].copy_from_slice(&g);
        db.data_mut()[ch] = s;
    }
    (dx, dw, db)
}

pub fn pointwise_forward<T: Real>(x: &Tensor4<T>, w: &Tensor4<T>, b: &Tensor4<T>) -> Tensor4<T> {
    let [bn, cin, h, wd] = x.dims();
    let cout = w.dims()[0];
    let n = h * wd;
    let mut out = Tensor4::zeros([bn, cout, h, wd]);
    for_each_chunk_mut(out.data_mut(), n, |plane, dst| {
        let (bi, o) = (plane / cout, plane % cout);
        dst.fill(b.data()[o]);
        for i in 0..cin {
            let wt = w.data()[o * cin + i];
            let src = &x.data()[(bi * cin + i) * n..(bi * cin + i + 1) * n];
            for (a, &s) in dst.iter_mut().zip(src) {
                *a = *a + wt * s;
            }
        }
    });
    out
}

/// Returns `(dx, dw, db)`.
pub fn pointwise_backward<T: Real>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    dout: &Tensor4<T>,
) -> (Tensor4<T>, Tensor4<T>, Tensor4<T>) {
    let [bn, cin, h, wd] = x.dims();
    let cout = w.dims()[0];
    let n = h * wd;

    let mut dx = Tensor4::zeros(x.dims());
    for_each_chunk_mut(dx.data_mut(), n, |plane, dst| {
        let (bi, i) = (plane / cin, plane % cin);
        for o in 0..cout {
            let wt = w.data()[o * cin + i];
            let g = &dout.data()[(bi * cout + o) * n..(bi * cout + o + 1) * n];
            for (a, &s) in dst.iter_mut().zip(g) {
                *a = *a + wt * s;
            }
        }
    });

    let rows: Vec<(Vec<T>, T)> = map_range(cout, |o| {
        let mut dw = vec![T::zero(); cin];
        let mut db = T::zero();
        for bi in 0..bn {
            let g = &dout.data()[(bi * cout + o) * n..(bi * cout + o + 1) * n];
            for (i, acc) in dw.iter_mut().enumerate() {
                let src = &x.data()[(bi * cin + i) * n..(bi * cin + i + 1) * n];
                *acc = *acc + g.iter().zip(src).map(|(&p, &q)| p * q).sum::<T>();
            }
            db = db + g.iter().copied().sum::<T>();
        }
        (dw, db)
    });
    let mut dw = Tensor4::zeros(w.dims());
    let mut db = Tensor4::zeros([1, cout, 1, 1]);
    for (o, (g, s)) in rows.into_iter().enumerate() {
        dw.data_mut()[o * cin..(o + 1) * cin].copy_from_slice(&g);
        db.data_mut()[o] = s;
    }
    (dx, dw, db)
}
