use crate::error::{invalid, shape, Result};
use crate::hsdata::Cube;

/// 3×3 Laplacian high-pass, valid region only.
fn laplacian_valid(p: &[f32], h: usize, w: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((h - 2) * (w - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let at = |yy: usize, xx: usize| p[yy * w + xx] as f64;
            out.push(4.0 * at(y, x) - at(y - 1, x) - at(y + 1, x) - at(y, x - 1) - at(y, x + 1));
        }
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SccResult {
    pub value: f64,
    /// Channels whose high-pass response had zero variance; they count as 0.
    pub degenerate_channels: usize,
}

/// Spatial correlation coefficient: Pearson correlation of Laplacian-filtered
/// planes, averaged over channels.
pub fn scc_detailed(reference: &Cube, test: &Cube) -> Result<SccResult> {
    if !reference.same_dims(test) {
        return Err(shape(format!("{:?} vs {:?}", reference.dims(), test.dims())));
    }
    let (c, h, w) = reference.dims();
    if h < 3 || w < 3 {
        return Err(invalid(format!("SCC needs at least 3x3 pixels, got {h}x{w}")));
    }
    let mut total = 0.0;
    let mut degenerate = 0;
    for ch in 0..c {
        let a = laplacian_valid(reference.plane(ch), h, w);
        let b = laplacian_valid(test.plane(ch), h, w);
        match pearson(&a, &b) {
            Some(r) => total += r,
            None => degenerate += 1,
        }
    }
    if degenerate > 0 {
        log::warn!("scc: {degenerate} of {c} channels have a flat high-pass response");
    }
    Ok(SccResult { value: total / c as f64, degenerate_channels: degenerate })
}

pub fn scc(reference: &Cube, test: &Cube) -> Result<f64> {
    Ok(scc_detailed(reference, test)?.value)
}
