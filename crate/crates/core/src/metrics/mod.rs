//! Full-reference quality metrics and false-colour rendering.
//!
//! All metrics assume data in normalised units (dynamic range 1) unless a
//! different range is passed explicitly.

mod pca;
mod psnr;
mod report;
mod scc;
mod ssim;

pub use pca::{pca_rgb, PcaBasis, RgbImage};
pub use psnr::{mse, psnr, psnr_from_mse, Psnr};
pub use report::{cube_metrics, evaluate, CubeMetrics, Evaluator, MethodRow, MetricsReport};
pub use scc::{scc, scc_detailed, SccResult};
pub use ssim::{ssim, ssim_plane, SsimParams};
