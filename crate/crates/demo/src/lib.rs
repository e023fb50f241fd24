//! WebAssembly bindings for the static demo page in `www/`.
//!
//! A [`Scene`] holds one synthetic cube. The page can degrade it with an
//! adjustable PSF, look at the LR and bicubic images in PCA false colour
//! (the basis is fitted once on the HR cube so colours are comparable), and
//! read the bicubic baseline's scores.

use wasm_bindgen::prelude::*;

use dscr_core::hsdata::{synth_cube, Cube, Spectrometer};
use dscr_core::metrics::{psnr, scc, ssim, PcaBasis, SsimParams};
use dscr_core::resample::{bicubic_upsample, degrade, DegradationSpec};

fn js(e: dscr_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Scene {
    hr: Cube,
    basis: PcaBasis,
    lr: Option<Cube>,
    upsampled: Option<Cube>,
}

#[wasm_bindgen]
impl Scene {
    /// A `channels × size × size` synthetic scene.
    #[wasm_bindgen(constructor)]
    pub fn new(channels: usize, size: usize, seed: u32, spatial_sigma: f64) -> Result<Scene, JsError> {
        let hr = synth_cube(channels, size, size, seed as u64, spatial_sigma, 0.6).map_err(js)?;
        let basis = PcaBasis::fit(&hr).map_err(js)?;
        Ok(Scene { hr, basis, lr: None, upsampled: None })
    }

    pub fn size(&self) -> usize {
        self.hr.height()
    }

    pub fn lr_size(&self) -> usize {
        self.lr.as_ref().map_or(0, Cube::height)
    }

    /// Built-in PSF sigmas `[across, along]` for a detector (0 UV, 1 UVIS, 2 NIR, 3 SWIR).
    pub fn detector_sigmas(detector: usize) -> Vec<f64> {
        let spec = DegradationSpec::for_spectrometer(Spectrometer::ALL[detector.min(3)]);
        vec![spec.sigma_across, spec.sigma_along]
    }

    /// Blur with the given sigmas (HR pixels), decimate, and bicubic-upsample back.
    pub fn degrade(&mut self, sigma_across: f64, sigma_along: f64, scale: usize) -> Result<(), JsError> {
        let spec = DegradationSpec {
            sigma_across,
            sigma_along,
            scale,
            ..DegradationSpec::for_spectrometer(Spectrometer::Uvis)
        };
        let lr = degrade(&self.hr, &spec).map_err(js)?;
        self.upsampled = Some(bicubic_upsample(&lr, scale).map_err(js)?);
        self.lr = Some(lr);
        Ok(())
    }

    pub fn reference_rgba(&self) -> Result<Vec<u8>, JsError> {
        self.rgba(&self.hr)
    }

    pub fn lr_rgba(&self) -> Result<Vec<u8>, JsError> {
        self.rgba(self.lr.as_ref().ok_or_else(not_degraded)?)
    }

    pub fn bicubic_rgba(&self) -> Result<Vec<u8>, JsError> {
        self.rgba(self.upsampled.as_ref().ok_or_else(not_degraded)?)
    }

    /// `[psnr_db, ssim, scc]` of the bicubic image against the HR scene.
    /// PSNR is `Infinity` when the two are identical.
    pub fn bicubic_scores(&self) -> Result<Vec<f64>, JsError> {
        let up = self.upsampled.as_ref().ok_or_else(not_degraded)?;
        let p = psnr(&self.hr, up, 1.0).map_err(js)?.db().unwrap_or(f64::INFINITY);
        let s = ssim(&self.hr, up, &SsimParams::default()).map_err(js)?;
        let c = scc(&self.hr, up).map_err(js)?;
        Ok(vec![p, s, c])
    }
}

impl Scene {
    fn rgba(&self, cube: &Cube) -> Result<Vec<u8>, JsError> {
        Ok(self.basis.render(cube).map_err(js)?.to_rgba())
    }
}

fn not_degraded() -> JsError {
    JsError::new("call degrade() first")
}
