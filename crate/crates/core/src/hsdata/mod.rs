//! Hyperspectral cube storage and the data-preparation pipeline:
//! cropping, outlier rejection, normalization, splitting and patch extraction.

mod band;
mod cube;
pub mod format;
mod normalize;
mod outlier;
mod patch;
mod split;
pub mod stats;
mod synth;
mod tiles;

pub use band::{BandInfo, Spectrometer};
pub use cube::{Cube, HsCube};
pub use format::{read_cube, write_cube, write_cube_with_stats, CubeSidecar};
pub use normalize::{normalize, NormStats};
pub use outlier::{outlier_filter, tukey_fences, IQR_OUTLIER};
pub use patch::{patchify, window_starts, PatchPair, PatchSpec};
pub use split::{split, split_counts, SplitAssignment, DEFAULT_FRACTIONS};
pub use synth::synth_cube;
pub use tiles::{crop_tiles, trim_to_multiple, Rejection, TileSet, TileSource};
