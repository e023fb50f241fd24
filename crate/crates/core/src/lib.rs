//! Hyperspectral single-image super-resolution.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`hsdata`]: the `HSC1` cube format, synthetic cubes, tiling, outlier
//!   rejection, normalization, splitting and patch extraction;
//! - [`resample`]: the sensor degradation model (asymmetric Gaussian PSF and
//!   decimation) and bicubic pre-upsampling;
//! - [`autograd`]: a tape-based reverse-mode engine with finite-difference checks;
//! - [`model`]: the depthwise-separable residual network and its weight file;
//! - [`train`]: Adam, reduce-on-plateau scheduling and the training loop;
//! - [`metrics`]: PSNR, SCC, SSIM, evaluation reports and PCA false-colour rendering.
//! - [`pipeline`]: dataset preparation tying the data and degradation steps together.

pub mod autograd;
pub mod error;
pub mod hsdata;
pub mod metrics;
pub mod model;
mod par;
pub mod pipeline;
pub mod real;
pub mod resample;
pub mod train;

pub use error::{Error, ErrorKind, Result};
