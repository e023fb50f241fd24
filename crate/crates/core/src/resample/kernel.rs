use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hsdata::Spectrometer;

pub const DEFAULT_TRUNCATION: f64 = 3.0;
pub const DEFAULT_SCALE: usize = 4;

/// Normalized 1-D Gaussian sampled on integer offsets `−r..=r`,
/// with `r = max(1, ceil(truncation · sigma))`.
pub fn gaussian_taps(sigma: f64, truncation: f64) -> Vec<f64> {
    let radius = ((truncation * sigma).ceil() as isize).max(1);
    let raw: Vec<f64> = (-radius..=radius)
        .map(|x| (-((x * x) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable 2-D kernel, anchored at its center.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    /// Vertical (row, along-track) taps.
    pub row_taps: Vec<f64>,
    /// Horizontal (column, across-track) taps.
    pub col_taps: Vec<f64>,
}

impl Kernel2D {
    pub fn rows(&self) -> usize {
        self.row_taps.len()
    }

    pub fn cols(&self) -> usize {
        self.col_taps.len()
    }

    pub fn tap(&self, r: usize, c: usize) -> f64 {
        self.row_taps[r] * self.col_taps[c]
    }

    /// Dense `[rows, cols]` taps, row-major.
    pub fn taps(&self) -> Vec<f64> {
        self.row_taps.iter().flat_map(|&r| self.col_taps.iter().map(move |&c| r * c)).collect()
    }

    pub fn transpose(&self) -> Kernel2D {
        Kernel2D { row_taps: self.col_taps.clone(), col_taps: self.row_taps.clone() }
    }
}

/// Asymmetric Gaussian PSF. Along-track maps to image rows, across-track to columns.
pub fn gaussian_kernel(sigma_across: f64, sigma_along: f64, truncation: f64) -> Result<Kernel2D> {
    for (name, s) in [("sigma_across", sigma_across), ("sigma_along", sigma_along)] {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("{name} must be positive, got {s}")));
        }
    }
    if !(truncation > 0.0) {
        return Err(invalid(format!("truncation must be positive, got {truncation}")));
    }
    Ok(Kernel2D {
        row_taps: gaussian_taps(sigma_along, truncation),
        col_taps: gaussian_taps(sigma_across, truncation),
    })
}

/// PSF and decimation parameters of one spectrometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub spectrometer: Spectrometer,
    pub sigma_across: f64,
    pub sigma_along: f64,
    pub scale: usize,
    pub truncation: f64,
    /// Interpret the sigmas on the LR grid, i.e. multiply them by `scale`
    /// before building the kernel. Off by default: sigmas are HR pixels.
    #[serde(default)]
    pub sigma_in_lr_pixels: bool,
}

impl DegradationSpec {
    /// Built-in per-detector sigmas (across, along), in HR pixels.
    pub fn for_spectrometer(spectrometer: Spectrometer) -> Self {
        let (sigma_across, sigma_along) = match spectrometer {
            Spectrometer::Uv => (0.37, 0.36),
            Spectrometer::Uvis => (0.44, 0.74),
            Spectrometer::Nir => (0.45, 0.74),
            Spectrometer::Swir => (0.15, 0.20),
        };
        DegradationSpec {
            spectrometer,
            sigma_across,
            sigma_along,
            scale: DEFAULT_SCALE,
            truncation: DEFAULT_TRUNCATION,
            sigma_in_lr_pixels: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 2 {
            return Err(invalid(format!("scale must be >= 2, got {}", self.scale)));
        }
        if !(self.sigma_across > 0.0 && self.sigma_along > 0.0) {
            return Err(invalid("sigmas must be positive"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel2D> {
        self.validate()?;
        let m = if self.sigma_in_lr_pixels { self.scale as f64 } else { 1.0 };
        gaussian_kernel(self.sigma_across * m, self.sigma_along * m, self.truncation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uvis_kernel_dims() {
        let k = gaussian_kernel(0.44, 0.74, 3.0).unwrap();
        assert_eq!((k.rows(), k.cols()), (7, 5));
    }

    #[test]
    fn minimum_radius_one() {
        let k = gaussian_kernel(0.15, 0.20, 3.0).unwrap();
        assert_eq!((k.rows(), k.cols()), (3, 3));
    }

    #[test]
    fn sums_to_one() {
        for spec in Spectrometer::ALL.map(DegradationSpec::for_spectrometer) {
            let total: f64 = spec.kernel().unwrap().taps().iter().sum();
            assert!((total - 1.0).abs() < 1e-6);
        }
        let total: f64 = gaussian_kernel(2.7, 0.3, 2.0).unwrap().taps().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_when_isotropic() {
        let k = gaussian_kernel(0.9, 0.9, 3.0).unwrap();
        assert_eq!(k, k.transpose());
    }

    #[test]
    fn table_values() {
        let s = DegradationSpec::for_spectrometer(Spectrometer::Uv);
        assert_eq!((s.sigma_across, s.sigma_along, s.scale), (0.37, 0.36, 4));
        let s = DegradationSpec::for_spectrometer(Spectrometer::Nir);
        assert_eq!((s.sigma_across, s.sigma_along), (0.45, 0.74));
    }

    #[test]
    fn non_positive_sigma() {
        assert!(gaussian_kernel(0.0, 1.0, 3.0).is_err());
        assert!(gaussian_kernel(1.0, -1.0, 3.0).is_err());
    }

    #[test]
    fn lr_pixel_sigmas_widen_kernel() {
        let mut s = DegradationSpec::for_spectrometer(Spectrometer::Uvis);
        s.sigma_in_lr_pixels = true;
        let k = s.kernel().unwrap();
        // 0.74*4 = 2.96 -> radius 9; 0.44*4 = 1.76 -> radius 6
        assert_eq!((k.rows(), k.cols()), (19, 13));
    }
}
