//! Dataset manifest written by `prepare` and consumed by `train`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dscr_core::hsdata::{patchify, read_cube, NormStats, PatchPair, PatchSpec, Rejection, SplitAssignment, TileSource};
use dscr_core::resample::DegradationSpec;
use dscr_core::train::BandDataset;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileEntry {
    pub id: usize,
    pub source: TileSource,
    /// Paths relative to the dataset directory.
    pub hr: PathBuf,
    pub lr: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub band_id: u16,
    pub channels: usize,
    pub inputs: Vec<PathBuf>,
    pub degradation: DegradationSpec,
    pub patch: PatchSpec,
    pub norm_stats: NormStats,
    pub split: SplitAssignment,
    pub tiles: Vec<TileEntry>,
    pub rejected: Vec<Rejection>,
}

impl Manifest {
    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_NAME)
    }

    pub fn load(dir: &Path) -> Result<Manifest> {
        let path = Self::path(dir);
        let raw = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_slice(&raw).with_context(|| format!("parsing {}", path.display()))?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = Self::path(dir);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    /// Loads the tiles and cuts them into patches, split as recorded.
    pub fn load_dataset(&self, dir: &Path) -> Result<BandDataset> {
        let patches = |ids: &[usize]| -> Result<Vec<PatchPair>> {
            let mut out = Vec::new();
            for &id in ids {
                let entry = self.tiles.get(id).with_context(|| format!("split refers to missing tile {id}"))?;
                let hr = read_cube(&dir.join(&entry.hr))?;
                let lr = read_cube(&dir.join(&entry.lr))?;
                out.extend(patchify(&hr.data, &lr.data, id, &self.patch)?);
            }
            Ok(out)
        };
        Ok(BandDataset {
            band_id: self.band_id,
            train: patches(&self.split.train)?,
            val: patches(&self.split.val)?,
            test: patches(&self.split.test)?,
        })
    }
}
