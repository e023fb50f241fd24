//! End-to-end dataset preparation for one band: crop, filter, split,
//! normalize, degrade and patchify.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hsdata::{
    crop_tiles, normalize, outlier_filter, patchify, split, Cube, HsCube, NormStats, PatchPair, PatchSpec, Rejection,
    SplitAssignment, TileSet, TileSource, DEFAULT_FRACTIONS,
};
use crate::resample::{degrade, DegradationSpec};
use crate::train::BandDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepareConfig {
    /// Tile size on the HR grid; `None` uses the band's nominal tile.
    pub tile: Option<(usize, usize)>,
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub iqr_k: f64,
    pub clip_pct: f64,
    pub patch: PatchSpec,
    /// `None` uses the built-in spectrometer PSF with `patch.scale`.
    pub degradation: Option<DegradationSpec>,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            tile: None,
            fractions: DEFAULT_FRACTIONS,
            seed: 0,
            iqr_k: 1.5,
            clip_pct: 0.01,
            patch: PatchSpec::default(),
            degradation: None,
        }
    }
}

/// Normalized HR tiles, their LR counterparts and the patch dataset.
#[derive(Debug, Clone)]
pub struct PreparedBand {
    pub band_id: u16,
    pub degradation: DegradationSpec,
    pub norm_stats: NormStats,
    pub split: SplitAssignment,
    pub sources: Vec<TileSource>,
    pub rejected: Vec<Rejection>,
    pub hr_tiles: Vec<Cube>,
    pub lr_tiles: Vec<Cube>,
    pub dataset: BandDataset,
}

impl PreparedBand {
    pub fn tiles_of<'a>(&'a self, indices: &'a [usize]) -> impl Iterator<Item = (&'a Cube, &'a Cube)> + 'a {
        indices.iter().map(|&i| (&self.hr_tiles[i], &self.lr_tiles[i]))
    }
}

pub fn prepare(cubes: &[(String, HsCube)], cfg: &PrepareConfig) -> Result<PreparedBand> {
    let first = cubes.first().ok_or_else(|| invalid("no input cubes"))?;
    let band = first.1.band;
    if let Some((id, _)) = cubes.iter().find(|(_, c)| c.band.band_id != band.band_id) {
        return Err(invalid(format!("cube {id} is not band {}", band.band_id)));
    }
    let spec = match cfg.degradation {
        Some(d) => d,
        None => DegradationSpec { scale: cfg.patch.scale, ..DegradationSpec::for_spectrometer(band.spectrometer) },
    };
    spec.validate()?;
    if spec.scale != cfg.patch.scale {
        return Err(invalid(format!("degradation scale {} != patch scale {}", spec.scale, cfg.patch.scale)));
    }

    let (th, tw) = cfg.tile.unwrap_or_else(|| band.nominal_tile());
    let mut all = TileSet::default();
    for (id, cube) in cubes {
        all.extend(crop_tiles(cube, id, th, tw, spec.scale)?)?;
    }
    let kept = outlier_filter(&all, cfg.iqr_k, cfg.clip_pct)?;
    log::info!("band {}: {} tiles, {} rejected", band.band_id, kept.len(), kept.rejected.len());

    let assignment = split(kept.len(), cfg.fractions, cfg.seed)?;
    let (_, stats) = normalize(&kept.subset(&assignment.train), None)?;
    let (normed, _) = normalize(&kept, Some(&stats))?;

    let hr_tiles: Vec<Cube> = normed.tiles.into_iter().map(|t| t.data).collect();
    let lr_tiles = hr_tiles.iter().map(|t| degrade(t, &spec)).collect::<Result<Vec<_>>>()?;

    let patches = |idx: &[usize]| -> Result<Vec<PatchPair>> {
        let mut out = Vec::new();
        for &i in idx {
            out.extend(patchify(&hr_tiles[i], &lr_tiles[i], i, &cfg.patch)?);
        }
        Ok(out)
    };
    let dataset = BandDataset {
        band_id: band.band_id,
        train: patches(&assignment.train)?,
        val: patches(&assignment.val)?,
        test: patches(&assignment.test)?,
    };

    Ok(PreparedBand {
        band_id: band.band_id,
        degradation: spec,
        norm_stats: stats,
        split: assignment,
        sources: normed.source_ids,
        rejected: kept.rejected,
        hr_tiles,
        lr_tiles,
        dataset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsdata::{synth_cube, BandInfo};

    #[test]
    fn small_synthetic_band() {
        let band = BandInfo::new(3).unwrap();
        let cubes: Vec<(String, HsCube)> = (0..2)
            .map(|i| {
                let c = synth_cube(4, 64, 64, i, 2.0, 0.7).unwrap();
                (format!("c{i}"), HsCube::new(band, c, "synthetic").unwrap())
            })
            .collect();
        let cfg = PrepareConfig {
            tile: Some((32, 32)),
            patch: PatchSpec { lr_size: 4, lr_stride: 4, scale: 4 },
            ..PrepareConfig::default()
        };
        let p = prepare(&cubes, &cfg).unwrap();
        let n = p.hr_tiles.len();
        assert_eq!(n + p.rejected.len(), 8);
        assert_eq!(p.lr_tiles[0].dims(), (4, 8, 8));
        let (a, b, c) = p.split.counts();
        assert_eq!(a + b + c, n);
        assert_eq!(p.dataset.train.len(), 4 * a);
        assert!(p.hr_tiles.iter().all(|t| t.data().iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn mixed_bands_rejected() {
        let a = HsCube::new(BandInfo::new(3).unwrap(), Cube::filled(2, 16, 16, 0.5), "a").unwrap();
        let b = HsCube::new(BandInfo::new(5).unwrap(), Cube::filled(2, 16, 16, 0.5), "b").unwrap();
        let cubes = vec![("a".to_string(), a), ("b".to_string(), b)];
        assert!(prepare(&cubes, &PrepareConfig::default()).is_err());
    }
}
