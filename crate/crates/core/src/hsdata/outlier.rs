use crate::error::{invalid, Error, Result};

use super::stats::{quantile_sorted, sorted_copy};

use super::tiles::{Rejection, TileSet};

pub const IQR_OUTLIER: &str = "iqr_outlier";

/// Two-stage outlier handling.
///
/// 1. Values inside each tile are clipped to that tile's
///    `[clip_pct, 1 − clip_pct]` quantile range.
/// 2. Tiles whose (clipped) median lies outside the Tukey fences
///    `[Q1 − k·IQR, Q3 + k·IQR]` of all tile medians are rejected.
pub fn outlier_filter(tiles: &TileSet, iqr_k: f64, clip_pct: f64) -> Result<TileSet> {
    if tiles.len() < 4 {
        return Err(Error::TooFewTiles { needed: 4, have: tiles.len() });
    }
    if !(0.0..0.5).contains(&clip_pct) || iqr_k < 0.0 {
        return Err(invalid(format!("bad outlier parameters k={iqr_k}, clip={clip_pct}")));
    }

    let mut clipped = Vec::with_capacity(tiles.len());
    let mut medians = Vec::with_capacity(tiles.len());
    for tile in &tiles.tiles {
        let sorted = sorted_copy(tile.data.data());
        let lo = quantile_sorted(&sorted, clip_pct) as f32;
        let hi = quantile_sorted(&sorted, 1.0 - clip_pct) as f32;
        let clipped_sorted: Vec<f32> = sorted.iter().map(|v| v.clamp(lo, hi)).collect();
        medians.push(quantile_sorted(&clipped_sorted, 0.5));
        clipped.push(tile.with_data(tile.data.map(|v| v.clamp(lo, hi))));
    }

    let (low_fence, high_fence) = tukey_fences(&medians, iqr_k);
    let mut out = TileSet { rejected: tiles.rejected.clone(), ..TileSet::default() };
    for (i, (tile, median)) in clipped.into_iter().zip(&medians).enumerate() {
        if *median < low_fence || *median > high_fence {
            out.rejected.push(Rejection { index: i, reason: IQR_OUTLIER.to_string() });
        } else {
            out.tiles.push(tile);
            out.source_ids.push(tiles.source_ids[i].clone());
        }
    }
    Ok(out)
}

pub fn tukey_fences(values: &[f64], k: f64) -> (f64, f64) {
    let mut s: Vec<f64> = values.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
        s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
    };
    let (q1, q3) = (q(0.25), q(0.75));
    let iqr = q3 - q1;
    (q1 - k * iqr, q3 + k * iqr)
}
