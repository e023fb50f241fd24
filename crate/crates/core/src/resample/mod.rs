//! Sensor degradation (asymmetric Gaussian PSF followed by decimation) and
//! bicubic pre-upsampling.

mod bicubic;
mod blur;
mod kernel;

pub use bicubic::{bicubic_plane, bicubic_upsample, keys_weight, KEYS_A};
pub use blur::{blur_plane_clamped, decimate, degrade, psf_blur};
pub use kernel::{gaussian_kernel, gaussian_taps, DegradationSpec, Kernel2D, DEFAULT_SCALE, DEFAULT_TRUNCATION};
