use crate::error::{invalid, shape, Result};
use crate::hsdata::Cube;
use crate::par::for_each_chunk_mut;

use super::kernel::{DegradationSpec, Kernel2D};

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable correlation of one plane with replicate (edge-clamped) padding.
/// Works for any tap count; the intermediate pass is kept in `f64`.
pub fn blur_plane_clamped(plane: &[f32], height: usize, width: usize, row_taps: &[f64], col_taps: &[f64]) -> Vec<f32> {
    let rr = (row_taps.len() / 2) as isize;
    let rc = (col_taps.len() / 2) as isize;
    let mut tmp = vec![0f64; height * width];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (j, &t) in col_taps.iter().enumerate() {
                acc += t * row[clamp_index(x as isize + j as isize - rc, width)] as f64;
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0f32; height * width];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (i, &t) in row_taps.iter().enumerate() {
                acc += t * tmp[clamp_index(y as isize + i as isize - rr, height) * width + x];
            }
            out[y * width + x] = acc as f32;
        }
    }
    out
}

/// Per-channel 2-D correlation with `kernel`, same output size, replicate padding.
pub fn psf_blur(cube: &Cube, kernel: &Kernel2D) -> Result<Cube> {
    let (_, h, w) = cube.dims();
    if kernel.rows() > h || kernel.cols() > w {
        return Err(invalid(format!(
            "kernel {}x{} larger than image {h}x{w}",
            kernel.rows(),
            kernel.cols()
        )));
    }
    let mut out = cube.clone();
    for_each_chunk_mut(out.data_mut(), h * w, |c, dst| {
        dst.copy_from_slice(&blur_plane_clamped(cube.plane(c), h, w, &kernel.row_taps, &kernel.col_taps));
    });
    Ok(out)
}

/// Keeps the samples at `(s·i, s·j)`.
pub fn decimate(cube: &Cube, scale: usize) -> Result<Cube> {
    let (c, h, w) = cube.dims();
    if scale == 0 || h % scale != 0 || w % scale != 0 {
        return Err(shape(format!("{h}x{w} is not divisible by scale {scale}")));
    }
    let (oh, ow) = (h / scale, w / scale);
    let mut out = Cube::zeros(c, oh, ow);
    for_each_chunk_mut(out.data_mut(), oh * ow, |ch, dst| {
        let src = cube.plane(ch);
        for y in 0..oh {
            for x in 0..ow {
                dst[y * ow + x] = src[y * scale * w + x * scale];
            }
        }
    });
    Ok(out)
}

/// Blur with the spectrometer PSF, then decimate.
pub fn degrade(cube: &Cube, spec: &DegradationSpec) -> Result<Cube> {
    spec.validate()?;
    let (_, h, w) = cube.dims();
    if h % spec.scale != 0 || w % spec.scale != 0 {
        return Err(shape(format!("{h}x{w} is not divisible by scale {}", spec.scale)));
    }
    decimate(&psf_blur(cube, &spec.kernel()?)?, spec.scale)
}
