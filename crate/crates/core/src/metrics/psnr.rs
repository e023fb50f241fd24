use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{shape, Result};
use crate::hsdata::Cube;

/// PSNR in dB, or `Identical` when the mean squared error is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Identical => None,
        }
    }

    /// Ordering key; `Identical` beats every finite value.
    pub fn rank(self) -> f64 {
        self.db().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.4}"),
            Psnr::Identical => f.write_str("identical"),
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Psnr::Db(v) => s.serialize_f64(*v),
            Psnr::Identical => s.serialize_str("identical"),
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr::Db(v)),
            Raw::Text(t) if t == "identical" => Ok(Psnr::Identical),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad PSNR value {t:?}"))),
        }
    }
}

pub fn mse(a: &Cube, b: &Cube) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len().max(1) as f64)
}

pub fn psnr_from_mse(mse: f64, max_val: f64) -> Psnr {
    if mse == 0.0 {
        Psnr::Identical
    } else {
        Psnr::Db(10.0 * (max_val * max_val / mse).log10())
    }
}

/// `10 · log10(max² / MSE)` with the MSE taken over the whole cube.
pub fn psnr(reference: &Cube, test: &Cube, max_val: f64) -> Result<Psnr> {
    Ok(psnr_from_mse(mse(reference, test)?, max_val))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let a = Cube::filled(2, 4, 4, 0.3);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), Psnr::Identical);
    }

    #[test]
    fn known_values() {
        let a = Cube::filled(1, 4, 4, 0.5);
        let b = Cube::filled(1, 4, 4, 0.51);
        let p = psnr(&a, &b, 1.0).unwrap().db().unwrap();
        assert!((p - 40.0).abs() < 1e-4, "{p}");
        assert!((psnr_from_mse(1e-4, 1.0).db().unwrap() - 40.0).abs() < 1e-12);
        assert!((psnr_from_mse(0.01, 1.0).db().unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn dims_checked() {
        assert!(psnr(&Cube::zeros(1, 4, 4), &Cube::zeros(1, 4, 5), 1.0).is_err());
    }

    #[test]
    fn serde_sentinel() {
        assert_eq!(serde_json::to_string(&Psnr::Identical).unwrap(), "\"identical\"");
        let p: Psnr = serde_json::from_str("31.5").unwrap();
        assert_eq!(p, Psnr::Db(31.5));
    }
}
