use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Spectrometer {
    Uv,
    Uvis,
    Nir,
    Swir,
}

impl Spectrometer {
    pub const ALL: [Spectrometer; 4] = [Self::Uv, Self::Uvis, Self::Nir, Self::Swir];

    pub fn name(self) -> &'static str {
        match self {
            Self::Uv => "UV",
            Self::Uvis => "UVIS",
            Self::Nir => "NIR",
            Self::Swir => "SWIR",
        }
    }
}

impl fmt::Display for Spectrometer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Spectrometer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "UV" => Ok(Self::Uv),
            "UVIS" => Ok(Self::Uvis),
            "NIR" => Ok(Self::Nir),
            "SWIR" => Ok(Self::Swir),
            other => Err(Error::InvalidArgument(format!("unknown spectrometer {other:?}"))),
        }
    }
}

/// Static description of one spectral band of the instrument.
///
/// Band 1 is deliberately absent: it is excluded from processing because of
/// its low signal-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandInfo {
    pub band_id: u16,
    pub spectrometer: Spectrometer,
    pub n_channels: usize,
    pub wavelength_range_nm: (f64, f64),
}

const BAND_TABLE: [BandInfo; 7] = [
    BandInfo { band_id: 2, spectrometer: Spectrometer::Uv, n_channels: 497, wavelength_range_nm: (300.0, 320.0) },
    BandInfo { band_id: 3, spectrometer: Spectrometer::Uvis, n_channels: 497, wavelength_range_nm: (320.0, 405.0) },
    BandInfo { band_id: 4, spectrometer: Spectrometer::Uvis, n_channels: 497, wavelength_range_nm: (405.0, 500.0) },
    BandInfo { band_id: 5, spectrometer: Spectrometer::Nir, n_channels: 497, wavelength_range_nm: (675.0, 725.0) },
    BandInfo { band_id: 6, spectrometer: Spectrometer::Nir, n_channels: 497, wavelength_range_nm: (725.0, 775.0) },
    BandInfo { band_id: 7, spectrometer: Spectrometer::Swir, n_channels: 480, wavelength_range_nm: (2305.0, 2345.0) },
    BandInfo { band_id: 8, spectrometer: Spectrometer::Swir, n_channels: 480, wavelength_range_nm: (2345.0, 2385.0) },
];

impl BandInfo {
    pub fn new(band_id: u16) -> Result<Self> {
        BAND_TABLE
            .iter()
            .find(|b| b.band_id == band_id)
            .copied()
            .ok_or(Error::UnsupportedBand(band_id))
    }

    pub fn all() -> &'static [BandInfo] {
        &BAND_TABLE
    }

    /// Nominal tile size (rows × columns) used when cropping full radiance images.
    pub fn nominal_tile(&self) -> (usize, usize) {
        match self.spectrometer {
            Spectrometer::Swir => (512, 215),
            _ => (512, 256),
        }
    }
}
