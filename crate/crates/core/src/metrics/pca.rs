use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, shape, Error, Result};
use crate::hsdata::Cube;

/// 8-bit interleaved RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// RGBA copy with opaque alpha, as expected by canvas `ImageData`.
    pub fn to_rgba(&self) -> Vec<u8> {
        self.data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
    }
}

/// Top three principal components of a reference cube (pixels as samples,
/// channels as variables) and the display range of each.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// `components[k]` is the k-th eigenvector, length C.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Min and max of the reference projection on each component.
    pub ranges: Vec<(f64, f64)>,
}

impl PcaBasis {
    pub fn fit(reference: &Cube) -> Result<Self> {
        let (c, h, w) = reference.dims();
        if c < 3 {
            return Err(invalid(format!("PCA false colour needs at least 3 channels, got {c}")));
        }
        let n = (h * w) as f64;
        let mean: Vec<f64> = (0..c).map(|ch| reference.plane(ch).iter().map(|&v| v as f64).sum::<f64>() / n).collect();
        let centered: Vec<Vec<f64>> =
            (0..c).map(|ch| reference.plane(ch).iter().map(|&v| v as f64 - mean[ch]).collect()).collect();
        let mut cov = DMatrix::<f64>::zeros(c, c);
        for i in 0..c {
            for j in i..c {
                let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum::<f64>() / n;
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        let trace: f64 = (0..c).map(|i| cov[(i, i)]).sum();
        if !(trace > 0.0) {
            return Err(Error::DegeneratePca);
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..c).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

        let mut components = Vec::with_capacity(3);
        let mut eigenvalues = Vec::with_capacity(3);
        for &k in order.iter().take(3) {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // sign convention: largest-magnitude entry positive
            let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            eigenvalues.push(eig.eigenvalues[k].max(0.0));
        }

        let mut basis = PcaBasis { mean, components, eigenvalues, ranges: Vec::new() };
        let proj = basis.project(reference)?;
        basis.ranges = proj
            .iter()
            .map(|p| p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))))
            .collect();
        Ok(basis)
    }

    /// Projection of every pixel of `cube` on the three components.
    pub fn project(&self, cube: &Cube) -> Result<Vec<Vec<f64>>> {
        let (c, h, w) = cube.dims();
        if c != self.mean.len() {
            return Err(shape(format!("cube has {c} channels, basis was fit on {}", self.mean.len())));
        }
        Ok(self
            .components
            .iter()
            .map(|comp| {
                let mut out = vec![0.0; h * w];
                for ch in 0..c {
                    let (m, e) = (self.mean[ch], comp[ch]);
                    for (o, &v) in out.iter_mut().zip(cube.plane(ch)) {
                        *o += (v as f64 - m) * e;
                    }
                }
                out
            })
            .collect())
    }

    /// Renders `cube` (any spatial size) with the reference stretch.
    pub fn render(&self, cube: &Cube) -> Result<RgbImage> {
        let proj = self.project(cube)?;
        let (h, w) = (cube.height(), cube.width());
        let top = self.eigenvalues[0];
        let mut data = vec![0u8; 3 * h * w];
        for (k, p) in proj.iter().enumerate() {
            let (lo, hi) = self.ranges[k];
            let span = hi - lo;
            // components with negligible variance render black
            if !(span > 0.0) || self.eigenvalues[k] <= 1e-12 * top {
                continue;
            }
            for (i, &v) in p.iter().enumerate() {
                data[3 * i + k] = (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8;
            }
        }
        Ok(RgbImage { width: w, height: h, data })
    }
}

/// False-colour rendering of `display` in the top-3 PCA basis of `reference`.
pub fn pca_rgb(reference: &Cube, display: &Cube) -> Result<RgbImage> {
    if !reference.same_dims(display) {
        return Err(shape(format!("{:?} vs {:?}", reference.dims(), display.dims())));
    }
    PcaBasis::fit(reference)?.render(display)
}
