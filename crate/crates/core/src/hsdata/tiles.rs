use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::cube::HsCube;

/// Where a tile came from inside its source cube.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSource {
    pub cube_id: String,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub index: usize,
    pub reason: String,
}

/// A set of equally sized tiles plus the bookkeeping for tiles that were dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TileSet {
    pub tiles: Vec<HsCube>,
    pub source_ids: Vec<TileSource>,
    pub rejected: Vec<Rejection>,
}

impl TileSet {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    /// Spatial size shared by every tile, if any.
    pub fn tile_dims(&self) -> Option<(usize, usize)> {
        self.tiles.first().map(|t| (t.data.height(), t.data.width()))
    }

    /// Appends another set; tile dims must agree.
    pub fn extend(&mut self, other: TileSet) -> Result<()> {
        if let (Some(a), Some(b)) = (self.tile_dims(), other.tile_dims()) {
            if a != b {
                return Err(Error::ShapeMismatch(format!("tile dims {a:?} vs {b:?}")));
            }
        }
        let offset = self.tiles.len();
        self.tiles.extend(other.tiles);
        self.source_ids.extend(other.source_ids);
        self.rejected.extend(
            other.rejected.into_iter().map(|r| Rejection { index: r.index + offset, reason: r.reason }),
        );
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> TileSet {
        TileSet {
            tiles: indices.iter().map(|&i| self.tiles[i].clone()).collect(),
            source_ids: indices.iter().map(|&i| self.source_ids[i].clone()).collect(),
            rejected: Vec::new(),
        }
    }
}

/// Largest multiple of `scale` not exceeding `n`.
pub fn trim_to_multiple(n: usize, scale: usize) -> usize {
    n - n % scale.max(1)
}

/// Non-overlapping row-major grid tiling; leftover margins are dropped.
///
/// Tile dimensions are first trimmed down to a multiple of `scale` so that
/// every tile can be decimated exactly.
pub fn crop_tiles(cube: &HsCube, cube_id: &str, tile_h: usize, tile_w: usize, scale: usize) -> Result<TileSet> {
    if scale == 0 {
        return Err(invalid("scale must be positive"));
    }
    let th = trim_to_multiple(tile_h, scale);
    let tw = trim_to_multiple(tile_w, scale);
    if th == 0 || tw == 0 {
        return Err(invalid(format!("tile {tile_h}x{tile_w} vanishes after trimming to scale {scale}")));
    }
    let (h, w) = (cube.data.height(), cube.data.width());
    if tile_h > h || tile_w > w {
        return Err(invalid(format!("cube {h}x{w} is smaller than one {tile_h}x{tile_w} tile")));
    }
    let mut set = TileSet::default();
    for r in 0..h / th {
        for c in 0..w / tw {
            let (row, col) = (r * th, c * tw);
            set.tiles.push(cube.with_data(cube.data.window(row, col, th, tw)?));
            set.source_ids.push(TileSource { cube_id: cube_id.to_string(), row, col });
        }
    }
    Ok(set)
}
