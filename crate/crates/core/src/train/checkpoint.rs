//! Resumable training checkpoints.
//!
//! A checkpoint with stem `dir/name` is three files: `name.dscw` (weights),
//! `name.opt` (Adam moments, binary) and `name.json` (schedule and history).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{load_weights, save_weights, ModelWeights};

use super::adam::{AdamHyper, AdamState};
use super::plateau::PlateauState;
use super::trainer::{EpochRecord, Trainer};

const OPT_MAGIC: [u8; 4] = *b"DSCO";
const OPT_VERSION: u16 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointMeta {
    plateau: PlateauState,
    epoch: usize,
    history: Vec<EpochRecord>,
    best_val_loss: Option<f64>,
    best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub weights: ModelWeights,
    pub adam: AdamState,
    pub plateau: PlateauState,
    pub epoch: usize,
    pub history: Vec<EpochRecord>,
    pub best_val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn encode_adam(adam: &AdamState) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&OPT_MAGIC);
    buf.extend_from_slice(&OPT_VERSION.to_le_bytes());
    buf.extend_from_slice(&adam.t.to_le_bytes());
    for v in [adam.lr, adam.hyper.beta1, adam.hyper.beta2, adam.hyper.eps] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(adam.m.len() as u32).to_le_bytes());
    for m in &adam.m {
        buf.extend_from_slice(&(m.len() as u32).to_le_bytes());
    }
    for moments in [&adam.m, &adam.v] {
        for t in moments {
            for x in t {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Corrupt("optimizer state: truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self.take(4 * n)?.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
    }
}

fn decode_adam(bytes: &[u8]) -> Result<AdamState> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if magic != OPT_MAGIC {
        return Err(Error::BadMagic { expected: OPT_MAGIC, found: magic });
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != OPT_VERSION {
        return Err(Error::VersionMismatch { expected: OPT_VERSION, found: version });
    }
    let t = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let (lr, beta1, beta2, eps) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let n = r.u32()? as usize;
    let sizes = (0..n).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let m = sizes.iter().map(|&len| r.f32s(len)).collect::<Result<Vec<_>>>()?;
    let v = sizes.iter().map(|&len| r.f32s(len)).collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("optimizer state: trailing bytes".into()));
    }
    Ok(AdamState { m, v, t, lr, hyper: AdamHyper { beta1, beta2, eps } })
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer) -> Self {
        Checkpoint {
            weights: t.weights.clone(),
            adam: t.adam.clone(),
            plateau: t.plateau,
            epoch: t.epoch,
            history: t.history.clone(),
            best_val_loss: t.best_val_loss,
            best_epoch: t.best_epoch,
        }
    }

    pub fn into_trainer(self) -> Trainer {
        Trainer {
            weights: self.weights,
            adam: self.adam,
            plateau: self.plateau,
            epoch: self.epoch,
            history: self.history,
            best_val_loss: self.best_val_loss,
            best_epoch: self.best_epoch,
        }
    }

    pub fn weights_path(stem: &Path) -> PathBuf {
        with_ext(stem, "dscw")
    }

    pub fn exists(stem: &Path) -> bool {
        ["dscw", "opt", "json"].iter().all(|e| with_ext(stem, e).exists())
    }

    pub fn save(&self, stem: &Path) -> Result<()> {
        save_weights(&self.weights, &with_ext(stem, "dscw"))?;
        let opt = with_ext(stem, "opt");
        fs::write(&opt, encode_adam(&self.adam)).map_err(|e| Error::io(&opt, e))?;
        let meta = CheckpointMeta {
            plateau: self.plateau,
            epoch: self.epoch,
            history: self.history.clone(),
            best_val_loss: self.best_val_loss,
            best_epoch: self.best_epoch,
        };
        let json = with_ext(stem, "json");
        fs::write(&json, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&json, e))?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let weights = load_weights(&with_ext(stem, "dscw"))?;
        let opt = with_ext(stem, "opt");
        let adam = decode_adam(&fs::read(&opt).map_err(|e| Error::io(&opt, e))?)?;
        let json = with_ext(stem, "json");
        let meta: CheckpointMeta = serde_json::from_slice(&fs::read(&json).map_err(|e| Error::io(&json, e))?)?;
        if adam.m.len() != weights.tensors().len()
            || adam.m.iter().zip(weights.tensors()).any(|(m, w)| m.len() != w.len())
        {
            return Err(Error::Corrupt("optimizer state does not match the weights".into()));
        }
        Ok(Checkpoint {
            weights,
            adam,
            plateau: meta.plateau,
            epoch: meta.epoch,
            history: meta.history,
            best_val_loss: meta.best_val_loss,
            best_epoch: meta.best_epoch,
        })
    }
}
