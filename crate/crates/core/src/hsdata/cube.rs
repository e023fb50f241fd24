use crate::error::{shape, Error, Result};

use super::band::BandInfo;

/// Dense `[C, H, W]` array of `f32`, channel-major and row-major within a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl Cube {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        Cube { channels, height, width, data: vec![value; channels * height * width] }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(shape(format!(
                "{} values cannot fill a {channels}x{height}x{width} cube",
                data.len()
            )));
        }
        Ok(Cube { channels, height, width, data })
    }

    pub fn from_planes(height: usize, width: usize, planes: &[Vec<f32>]) -> Result<Self> {
        let mut data = Vec::with_capacity(planes.len() * height * width);
        for p in planes {
            if p.len() != height * width {
                return Err(shape("plane size does not match cube dims"));
            }
            data.extend_from_slice(p);
        }
        Cube::from_vec(planes.len(), height, width, data)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }
    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }
    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }
    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }
    pub fn planes(&self) -> std::slice::Chunks<'_, f32> {
        self.data.chunks(self.plane_len().max(1))
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }
    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Copy a spatial window `[y0, y0+h) × [x0, x0+w)` across all channels.
    pub fn window(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Cube> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(shape(format!(
                "window {h}x{w} at ({y0},{x0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut out = Vec::with_capacity(self.channels * h * w);
        for c in 0..self.channels {
            let p = self.plane(c);
            for y in y0..y0 + h {
                out.extend_from_slice(&p[y * self.width + x0..y * self.width + x0 + w]);
            }
        }
        Cube::from_vec(self.channels, h, w, out)
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Cube {
        Cube {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_dims(&self, other: &Cube) -> bool {
        self.dims() == other.dims()
    }
}

/// A hyperspectral image of one band together with its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HsCube {
    pub band: BandInfo,
    pub data: Cube,
    pub provenance: String,
    /// Set when the cube carries fewer channels than the band nominally has.
    pub reduced_channels: bool,
}

impl HsCube {
    /// Builds a cube, checking the channel count against the band and
    /// rejecting non-finite samples.
    pub fn new(band: BandInfo, data: Cube, provenance: impl Into<String>) -> Result<Self> {
        let reduced = data.channels() != band.n_channels;
        if data.channels() == 0 || data.channels() > band.n_channels {
            return Err(Error::HeaderMismatch(format!(
                "cube has {} channels, band {} has {}",
                data.channels(),
                band.band_id,
                band.n_channels
            )));
        }
        if let Some(index) = data.first_non_finite() {
            return Err(Error::NonFinite { index });
        }
        Ok(HsCube { band, data, provenance: provenance.into(), reduced_channels: reduced })
    }

    pub fn with_data(&self, data: Cube) -> HsCube {
        HsCube {
            band: self.band,
            reduced_channels: data.channels() != self.band.n_channels,
            data,
            provenance: self.provenance.clone(),
        }
    }
}
