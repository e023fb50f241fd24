//! The `HSC1` binary cube format.
//!
//! Layout (all integers and floats little-endian):
//!
//! | offset | size | field                              |
//! |--------|------|------------------------------------|
//! | 0      | 4    | magic `"HSC1"`                     |
//! | 4      | 2    | format version (`u16`, currently 1) |
//! | 6      | 2    | band id (`u16`)                    |
//! | 8      | 12   | C, H, W (`u32` each)               |
//! | 20     | 16   | wavelength lo, hi (`f64` each)     |
//! | 36     | 16   | reserved, zero                     |
//! | 52     | 4·CHW| payload, `f32`, channel-major      |
//!
//! Provenance and normalization statistics live in a JSON sidecar with the
//! same basename and a `.json` extension.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::band::BandInfo;
use super::cube::{Cube, HsCube};
use super::normalize::NormStats;

pub const HSC_MAGIC: [u8; 4] = *b"HSC1";
pub const HSC_VERSION: u16 = 1;
pub const HSC_HEADER_LEN: usize = 52;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CubeSidecar {
    pub provenance: String,
    #[serde(default)]
    pub reduced_channels: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_stats: Option<NormStats>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn encode_cube(cube: &HsCube) -> Vec<u8> {
    let (c, h, w) = cube.data.dims();
    let mut buf = Vec::with_capacity(HSC_HEADER_LEN + 4 * c * h * w);
    buf.extend_from_slice(&HSC_MAGIC);
    buf.extend_from_slice(&HSC_VERSION.to_le_bytes());
    buf.extend_from_slice(&cube.band.band_id.to_le_bytes());
    for d in [c, h, w] {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    buf.extend_from_slice(&cube.band.wavelength_range_nm.0.to_le_bytes());
    buf.extend_from_slice(&cube.band.wavelength_range_nm.1.to_le_bytes());
    buf.extend_from_slice(&[0u8; 16]);
    for v in cube.data.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

/// Decodes an `HSC1` byte stream. Provenance is left empty; see [`read_cube`].
pub fn decode_cube(bytes: &[u8]) -> Result<HsCube> {
    if bytes.len() < 4 {
        return Err(Error::Truncated { expected: HSC_HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let found: [u8; 4] = bytes[..4].try_into().unwrap();
    if found != HSC_MAGIC {
        return Err(Error::BadMagic { expected: HSC_MAGIC, found });
    }
    if bytes.len() < HSC_HEADER_LEN {
        return Err(Error::Truncated { expected: HSC_HEADER_LEN as u64, found: bytes.len() as u64 });
    }
    let version = u16_at(bytes, 4);
    if version != HSC_VERSION {
        return Err(Error::VersionMismatch { expected: HSC_VERSION, found: version });
    }
    let band_id = u16_at(bytes, 6);
    let band = BandInfo::new(band_id)
        .map_err(|_| Error::HeaderMismatch(format!("unknown band id {band_id}")))?;
    let (c, h, w) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize, u32_at(bytes, 16) as usize);
    let wl = (f64_at(bytes, 20), f64_at(bytes, 28));
    if wl != band.wavelength_range_nm {
        return Err(Error::HeaderMismatch(format!(
            "wavelength range {wl:?} does not match band {band_id} ({:?})",
            band.wavelength_range_nm
        )));
    }
    if bytes[36..52].iter().any(|&b| b != 0) {
        return Err(Error::HeaderMismatch("reserved bytes are not zero".into()));
    }
    if c == 0 || c > band.n_channels {
        return Err(Error::HeaderMismatch(format!(
            "header declares {c} channels, band {band_id} has {}",
            band.n_channels
        )));
    }
    let payload = &bytes[HSC_HEADER_LEN..];
    let expected = 4 * (c as u64) * (h as u64) * (w as u64);
    if (payload.len() as u64) < expected {
        return Err(Error::Truncated { expected, found: payload.len() as u64 });
    }
    if (payload.len() as u64) > expected {
        return Err(Error::HeaderMismatch(format!(
            "payload holds {} bytes, header implies {expected}",
            payload.len()
        )));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    if let Some(index) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let cube = Cube::from_vec(c, h, w, data)?;
    HsCube::new(band, cube, String::new())
}

pub fn write_cube(cube: &HsCube, path: &Path) -> Result<()> {
    write_cube_with_stats(cube, None, path)
}

pub fn write_cube_with_stats(cube: &HsCube, stats: Option<&NormStats>, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_cube(cube)).map_err(|e| Error::io(path, e))?;
    let sidecar = CubeSidecar {
        provenance: cube.provenance.clone(),
        reduced_channels: cube.reduced_channels,
        norm_stats: stats.cloned(),
    };
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_vec_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))?;
    Ok(())
}

/// Reads a cube and, when present, its JSON sidecar.
pub fn read_cube(path: &Path) -> Result<HsCube> {
    Ok(read_cube_with_sidecar(path)?.0)
}

pub fn read_cube_with_sidecar(path: &Path) -> Result<(HsCube, Option<CubeSidecar>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cube = decode_cube(&bytes)?;
    let side = sidecar_path(path);
    let sidecar = match fs::read(&side) {
        Ok(raw) => Some(serde_json::from_slice::<CubeSidecar>(&raw)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(Error::io(&side, e)),
    };
    if let Some(s) = &sidecar {
        cube.provenance = s.provenance.clone();
    }
    Ok((cube, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hsdata::synth::synth_cube;

    fn sample() -> HsCube {
        let data = synth_cube(8, 16, 16, 7, 2.0, 0.5).unwrap();
        HsCube::new(BandInfo::new(3).unwrap(), data, "unit test").unwrap()
    }

    #[test]
    fn round_trip_bytes() {
        let cube = sample();
        let mut back = decode_cube(&encode_cube(&cube)).unwrap();
        back.provenance = cube.provenance.clone();
        assert_eq!(back, cube);
        assert!(back.reduced_channels);
    }

    #[test]
    fn round_trip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.hsc");
        let cube = sample();
        write_cube(&cube, &path).unwrap();
        let back = read_cube(&path).unwrap();
        assert_eq!(back, cube);
        let bits: Vec<u32> = back.data.data().iter().map(|v| v.to_bits()).collect();
        let want: Vec<u32> = cube.data.data().iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, want);
    }

    #[test]
    fn header_is_52_bytes() {
        let bytes = encode_cube(&sample());
        assert_eq!(bytes.len(), HSC_HEADER_LEN + 4 * 8 * 16 * 16);
        assert_eq!(&bytes[..4], b"HSC1");
        assert_eq!(u16_at(&bytes, 6), 3);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode_cube(&sample());
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode_cube(&bytes), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_plane() {
        let data = Cube::filled(497, 2, 3, 0.5);
        let cube = HsCube::new(BandInfo::new(2).unwrap(), data, "").unwrap();
        let mut bytes = encode_cube(&cube);
        // drop one full plane: header still says C=497
        bytes.truncate(bytes.len() - 4 * 6);
        assert!(matches!(decode_cube(&bytes), Err(Error::Truncated { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let mut bytes = encode_cube(&sample());
        let at = HSC_HEADER_LEN + 4 * 5;
        bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_cube(&bytes), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn header_mismatch_on_channel_count() {
        let mut bytes = encode_cube(&sample());
        bytes[8..12].copy_from_slice(&600u32.to_le_bytes());
        assert!(matches!(decode_cube(&bytes), Err(Error::HeaderMismatch(_))));
    }

    #[test]
    fn version_checked() {
        let mut bytes = encode_cube(&sample());
        bytes[4..6].copy_from_slice(&9u16.to_le_bytes());
        assert!(matches!(decode_cube(&bytes), Err(Error::VersionMismatch { found: 9, .. })));
    }
}
