use crate::error::{invalid, Result};
use crate::hsdata::Cube;
use crate::par::for_each_chunk_mut;
use crate::real::Real;

/// Keys cubic-convolution parameter.
pub const KEYS_A: f64 = -0.5;

/// Keys cubic-convolution kernel with `a = −0.5`.
pub fn keys_weight(t: f64) -> f64 {
    let a = KEYS_A;
    let t = t.abs();
    if t <= 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a
    } else {
        0.0
    }
}

/// Source indices and weights for every output coordinate along one axis.
struct AxisTaps {
    index: Vec<[usize; 4]>,
    weight: Vec<[f64; 4]>,
}

fn axis_taps(n_in: usize, scale: usize) -> AxisTaps {
    let n_out = n_in * scale;
    let mut index = Vec::with_capacity(n_out);
    let mut weight = Vec::with_capacity(n_out);
    for dst in 0..n_out {
        // half-pixel centers
        let src = (dst as f64 + 0.5) / scale as f64 - 0.5;
        let base = src.floor();
        let frac = src - base;
        let base = base as isize;
        let mut idx = [0usize; 4];
        let mut w = [0f64; 4];
        for k in 0..4 {
            let offset = k as isize - 1;
            idx[k] = (base + offset).clamp(0, n_in as isize - 1) as usize;
            w[k] = keys_weight(frac - offset as f64);
        }
        index.push(idx);
        weight.push(w);
    }
    AxisTaps { index, weight }
}

/// Upsamples one `height × width` plane by an integer factor.
pub fn bicubic_plane<T: Real>(src: &[T], height: usize, width: usize, scale: usize) -> Vec<T> {
    let (oh, ow) = (height * scale, width * scale);
    let cols = axis_taps(width, scale);
    let rows = axis_taps(height, scale);
    let mut tmp = vec![0f64; height * ow];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            let (idx, w) = (&cols.index[x], &cols.weight[x]);
            tmp[y * ow + x] = (0..4).map(|k| w[k] * row[idx[k]].as_f64()).sum();
        }
    }
    let mut out = vec![T::zero(); oh * ow];
    for y in 0..oh {
        let (idx, w) = (&rows.index[y], &rows.weight[y]);
        for x in 0..ow {
            let v: f64 = (0..4).map(|k| w[k] * tmp[idx[k] * ow + x]).sum();
            out[y * ow + x] = T::from_f64(v);
        }
    }
    out
}

/// Per-channel bicubic interpolation to `scale×` the spatial size.
pub fn bicubic_upsample(cube: &Cube, scale: usize) -> Result<Cube> {
    if scale < 2 {
        return Err(invalid(format!("upsampling scale must be >= 2, got {scale}")));
    }
    let (c, h, w) = cube.dims();
    let mut out = Cube::zeros(c, h * scale, w * scale);
    for_each_chunk_mut(out.data_mut(), h * w * scale * scale, |ch, dst| {
        dst.copy_from_slice(&bicubic_plane(cube.plane(ch), h, w, scale));
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        assert_eq!(keys_weight(0.0), 1.0);
        assert_eq!(keys_weight(1.0), 0.0);
        assert_eq!(keys_weight(2.0), 0.0);
        // w(0.5) = 0.5625, w(1.5) = -0.0625 for a = -0.5
        assert!((keys_weight(0.5) - 0.5625).abs() < 1e-12);
        assert!((keys_weight(1.5) + 0.0625).abs() < 1e-12);
    }

    #[test]
    fn constant_everywhere() {
        let c = Cube::filled(3, 5, 7, 0.3);
        let up = bicubic_upsample(&c, 4).unwrap();
        assert_eq!(up.dims(), (3, 20, 28));
        assert!(up.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn shape() {
        assert_eq!(bicubic_upsample(&Cube::zeros(1, 64, 64), 4).unwrap().dims(), (1, 256, 256));
        assert!(bicubic_upsample(&Cube::zeros(1, 4, 4), 1).is_err());
    }
}
