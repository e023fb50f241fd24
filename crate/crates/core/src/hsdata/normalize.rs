use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::cube::Cube;
use super::stats::quantile;
use super::tiles::TileSet;

pub const NORM_LO_PCT: f64 = 0.01;
pub const NORM_HI_PCT: f64 = 0.99;

/// Affine normalization range of one band, taken from the training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub band_id: u16,
    pub lo: f64,
    pub hi: f64,
}

impl NormStats {
    pub fn from_tiles(tiles: &TileSet) -> Result<NormStats> {
        let first = tiles.tiles.first().ok_or(Error::TooFewTiles { needed: 1, have: 0 })?;
        let all: Vec<f32> = tiles.tiles.iter().flat_map(|t| t.data.data().iter().copied()).collect();
        let lo = quantile(&all, NORM_LO_PCT);
        let hi = quantile(&all, NORM_HI_PCT);
        let stats = NormStats { band_id: first.band.band_id, lo, hi };
        stats.check()?;
        Ok(stats)
    }

    fn check(&self) -> Result<()> {
        if !(self.hi > self.lo) {
            return Err(Error::DegenerateRange(self.lo));
        }
        Ok(())
    }

    pub fn apply(&self, cube: &Cube) -> Cube {
        let (lo, span) = (self.lo, self.hi - self.lo);
        cube.map(|v| (((v as f64 - lo) / span) as f32).clamp(0.0, 1.0))
    }

    /// Maps normalized values back to radiance units.
    pub fn invert(&self, cube: &Cube) -> Cube {
        let (lo, span) = (self.lo, self.hi - self.lo);
        cube.map(|v| (lo + v as f64 * span) as f32)
    }
}

/// Normalizes every tile with `stats`, or with statistics computed from
/// `tiles` themselves when `stats` is `None` (which must then be the training split).
pub fn normalize(tiles: &TileSet, stats: Option<&NormStats>) -> Result<(TileSet, NormStats)> {
    let stats = match stats {
        Some(s) => {
            s.check()?;
            *s
        }
        None => NormStats::from_tiles(tiles)?,
    };
    let out = TileSet {
        tiles: tiles.tiles.iter().map(|t| t.with_data(stats.apply(&t.data))).collect(),
        source_ids: tiles.source_ids.clone(),
        rejected: tiles.rejected.clone(),
    };
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsdata::{BandInfo, HsCube, TileSource};

    fn tiles_of(cubes: Vec<Cube>) -> TileSet {
        let band = BandInfo::new(5).unwrap();
        let n = cubes.len();
        TileSet {
            tiles: cubes.into_iter().map(|c| HsCube::new(band, c, "").unwrap()).collect(),
            source_ids: (0..n).map(|i| TileSource { cube_id: "u".into(), row: i, col: 0 }).collect(),
            rejected: vec![],
        }
    }

    #[test]
    fn uniform_two_to_four() {
        // evenly spaced values on [2, 4]
        let cubes: Vec<Cube> = (0..4)
            .map(|t| {
                let v = (0..1000).map(|i| 2.0 + 2.0 * ((i * 4 + t) as f32 / 3999.0)).collect();
                Cube::from_vec(1, 25, 40, v).unwrap()
            })
            .collect();
        let (out, stats) = normalize(&tiles_of(cubes), None).unwrap();
        assert!((stats.lo - 2.02).abs() < 1e-3, "{}", stats.lo);
        assert!((stats.hi - 3.98).abs() < 1e-3, "{}", stats.hi);
        assert!(out.tiles.iter().all(|t| t.data.data().iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn invert_round_trip() {
        let stats = NormStats { band_id: 5, lo: 2.0, hi: 4.0 };
        let c = Cube::from_vec(1, 1, 4, vec![2.0, 2.5, 3.3, 4.0]).unwrap();
        let back = stats.invert(&stats.apply(&c));
        for (a, b) in back.data().iter().zip(c.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let t = tiles_of(vec![Cube::filled(1, 4, 4, 3.0), Cube::filled(1, 4, 4, 3.0)]);
        assert!(matches!(normalize(&t, None), Err(Error::DegenerateRange(_))));
    }
}
