use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};

use super::cube::Cube;

/// Sliding-window geometry on the LR grid; the HR window is the scaled counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub lr_size: usize,
    pub lr_stride: usize,
    pub scale: usize,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec { lr_size: 64, lr_stride: 32, scale: 4 }
    }
}

impl PatchSpec {
    pub fn hr_size(&self) -> usize {
        self.lr_size * self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchPair {
    pub lr: Cube,
    pub hr: Cube,
    pub tile_id: usize,
    /// Top-left corner of the LR window (row, col).
    pub offset: (usize, usize),
}

/// Window start positions along one axis; the last window is pulled back to
/// end exactly at the edge so the whole axis is covered.
pub fn window_starts(len: usize, size: usize, stride: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut pos = 0;
    while pos + size <= len {
        starts.push(pos);
        pos += stride;
    }
    match starts.last() {
        Some(&last) if last + size < len => starts.push(len - size),
        None => starts.push(0),
        _ => {}
    }
    starts
}

pub fn patchify(hr: &Cube, lr: &Cube, tile_id: usize, spec: &PatchSpec) -> Result<Vec<PatchPair>> {
    let s = spec.scale;
    if s == 0 || spec.lr_size == 0 || spec.lr_stride == 0 {
        return Err(invalid(format!("invalid patch spec {spec:?}")));
    }
    if hr.channels() != lr.channels() || hr.height() != s * lr.height() || hr.width() != s * lr.width() {
        return Err(shape(format!(
            "HR tile {:?} is not {s}x LR tile {:?}",
            hr.dims(),
            lr.dims()
        )));
    }
    let ph = spec.lr_size.min(lr.height());
    let pw = spec.lr_size.min(lr.width());
    let rows = window_starts(lr.height(), ph, spec.lr_stride);
    let cols = window_starts(lr.width(), pw, spec.lr_stride);
    let mut out = Vec::with_capacity(rows.len() * cols.len());
    for &r in &rows {
        for &c in &cols {
            out.push(PatchPair {
                lr: lr.window(r, c, ph, pw)?,
                hr: hr.window(r * s, c * s, ph * s, pw * s)?,
                tile_id,
                offset: (r, c),
            });
        }
    }
    Ok(out)
}
