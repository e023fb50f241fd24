use crate::error::{invalid, shape, Result};
use crate::hsdata::Cube;
use crate::par::map_range;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams { window: 11, sigma: 1.5, k1: 0.01, k2: 0.03, range: 1.0 }
    }
}

impl SsimParams {
    /// Normalized 1-D Gaussian of length `window`.
    pub fn taps(&self) -> Vec<f64> {
        let r = (self.window / 2) as isize;
        let raw: Vec<f64> = (-r..=r).map(|x| (-((x * x) as f64) / (2.0 * self.sigma * self.sigma)).exp()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Separable "valid" filtering: output is `(h − n + 1) × (w − n + 1)`.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let n = taps.len();
    let (oh, ow) = (h - n + 1, w - n + 1);
    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = taps.iter().enumerate().map(|(k, &t)| t * src[y * w + x + k]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps.iter().enumerate().map(|(k, &t)| t * tmp[(y + k) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM of one plane pair, Gaussian-weighted local statistics over valid windows.
pub fn ssim_plane(a: &[f32], b: &[f32], h: usize, w: usize, p: &SsimParams) -> f64 {
    let taps = p.taps();
    let c1 = (p.k1 * p.range).powi(2);
    let c2 = (p.k2 * p.range).powi(2);
    let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(&x, h, w, &taps);
    let my = filter_valid(&y, h, w, &taps);
    let exx = filter_valid(&xx, h, w, &taps);
    let eyy = filter_valid(&yy, h, w, &taps);
    let exy = filter_valid(&xy, h, w, &taps);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = exx[i] - ux * ux;
        let vy = eyy[i] - uy * uy;
        let cxy = exy[i] - ux * uy;
        total += ((2.0 * ux * uy + c1) * (2.0 * cxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
    }
    total / mx.len() as f64
}

/// Single-scale SSIM averaged over the map, then over channels.
pub fn ssim(reference: &Cube, test: &Cube, params: &SsimParams) -> Result<f64> {
    if !reference.same_dims(test) {
        return Err(shape(format!("{:?} vs {:?}", reference.dims(), test.dims())));
    }
    let (c, h, w) = reference.dims();
    if params.window == 0 || params.window % 2 == 0 {
        return Err(invalid(format!("SSIM window must be odd, got {}", params.window)));
    }
    if h < params.window || w < params.window {
        return Err(invalid(format!("image {h}x{w} is smaller than the {0}x{0} SSIM window", params.window)));
    }
    let per_channel = map_range(c, |ch| ssim_plane(reference.plane(ch), test.plane(ch), h, w, params));
    Ok(per_channel.iter().sum::<f64>() / c as f64)
}
