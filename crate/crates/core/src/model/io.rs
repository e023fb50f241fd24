//! `DSCW` weight files.
//!
//! Magic `"DSCW"`, version `u16`, then six `u32` (C, L, k, m_p, s, flags),
//! then every tensor in declaration order as `f32`, all little-endian.
//! Flag bit 0 is `share_module_weights`, bit 1 is `final_linear`.

use std::fs;
use std::path::Path;

use crate::autograd::Tensor4;
use crate::error::{Error, Result};

use super::config::ModelConfig;
use super::weights::{tensor_shapes, ModelWeights};

pub const DSCW_MAGIC: [u8; 4] = *b"DSCW";
pub const DSCW_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 6 * 4;

const FLAG_SHARED: u32 = 1;
const FLAG_FINAL_LINEAR: u32 = 2;

pub fn encode_weights(weights: &ModelWeights) -> Vec<u8> {
    let c = &weights.config;
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * weights.n_params());
    buf.extend_from_slice(&DSCW_MAGIC);
    buf.extend_from_slice(&DSCW_VERSION.to_le_bytes());
    let flags = if c.share_module_weights { FLAG_SHARED } else { 0 } | if c.final_linear { FLAG_FINAL_LINEAR } else { 0 };
    for v in [c.channels as u32, c.n_modules as u32, c.dw_kernel as u32, c.pointwise_per_module as u32, c.scale as u32, flags] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for t in weights.tensors() {
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn decode_weights(bytes: &[u8]) -> Result<ModelWeights> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt(format!("weight file is {} bytes, shorter than its header", bytes.len())));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != DSCW_MAGIC {
        return Err(Error::BadMagic { expected: DSCW_MAGIC, found: magic });
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DSCW_VERSION {
        return Err(Error::VersionMismatch { expected: DSCW_VERSION, found: version });
    }
    let field = |i: usize| u32::from_le_bytes(bytes[6 + 4 * i..10 + 4 * i].try_into().unwrap()) as usize;
    let flags = field(5) as u32;
    if flags & !(FLAG_SHARED | FLAG_FINAL_LINEAR) != 0 {
        return Err(Error::Corrupt(format!("unknown flag bits {flags:#x}")));
    }
    let config = ModelConfig {
        channels: field(0),
        n_modules: field(1),
        dw_kernel: field(2),
        pointwise_per_module: field(3),
        scale: field(4),
        share_module_weights: flags & FLAG_SHARED != 0,
        final_linear: flags & FLAG_FINAL_LINEAR != 0,
    };
    config.validate().map_err(|e| Error::Corrupt(format!("invalid config block: {e}")))?;
    let shapes = tensor_shapes(&config);
    let total: u64 = shapes.iter().map(|s| s.iter().product::<usize>() as u64).sum();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != 4 * total {
        return Err(Error::Corrupt(format!(
            "payload holds {} bytes, config implies {}",
            payload.len(),
            4 * total
        )));
    }
    let mut values = payload.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()));
    let mut tensors = Vec::with_capacity(shapes.len());
    for dims in shapes {
        let n: usize = dims.iter().product();
        tensors.push(Tensor4::from_vec(dims, values.by_ref().take(n).collect())?);
    }
    let weights = ModelWeights::from_tensors(&config, tensors)?;
    if !weights.all_finite() {
        return Err(Error::Corrupt("non-finite weight".into()));
    }
    Ok(weights)
}

pub fn save_weights(weights: &ModelWeights, path: &Path) -> Result<()> {
    fs::write(path, encode_weights(weights)).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: &Path) -> Result<ModelWeights> {
    decode_weights(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
