use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::hsdata::Cube;

use super::psnr::{psnr, Psnr};
use super::scc::scc_detailed;
use super::ssim::{ssim, SsimParams};

/// Metrics of one method on one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeMetrics {
    pub psnr_db: Psnr,
    pub scc: f64,
    pub ssim: f64,
    pub degenerate_scc_channels: usize,
}

/// Aggregate over all images evaluated for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub n_images: usize,
    /// Mean of the finite values; `identical` only if every image matched exactly.
    pub psnr_db: Psnr,
    pub scc: f64,
    pub ssim: f64,
    /// Not computed; kept so the schema has a slot for it.
    pub lpips: Option<f64>,
    pub best_psnr: bool,
    pub best_scc: bool,
    pub best_ssim: bool,
    pub per_cube: Vec<CubeMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub band_id: Option<u16>,
    pub rows: Vec<MethodRow>,
}

pub fn cube_metrics(reference: &Cube, test: &Cube, params: &SsimParams) -> Result<CubeMetrics> {
    if !reference.same_dims(test) {
        return Err(shape(format!("{:?} vs {:?}", reference.dims(), test.dims())));
    }
    let s = scc_detailed(reference, test)?;
    Ok(CubeMetrics {
        psnr_db: psnr(reference, test, params.range)?,
        scc: s.value,
        ssim: ssim(reference, test, params)?,
        degenerate_scc_channels: s.degenerate_channels,
    })
}

/// Accumulates per-image metrics for a fixed set of methods.
#[derive(Debug, Clone)]
pub struct Evaluator {
    band_id: Option<u16>,
    params: SsimParams,
    methods: Vec<(String, Vec<CubeMetrics>)>,
}

impl Evaluator {
    pub fn new(band_id: Option<u16>) -> Self {
        Evaluator { band_id, params: SsimParams::default(), methods: Vec::new() }
    }

    pub fn with_params(mut self, params: SsimParams) -> Self {
        self.params = params;
        self
    }

    /// Scores every labelled cube against `reference`. Labels seen for the
    /// first time become new rows, in order of appearance.
    pub fn add(&mut self, reference: &Cube, tests: &[(&str, &Cube)]) -> Result<()> {
        let scored = tests
            .iter()
            .map(|(label, cube)| Ok((*label, cube_metrics(reference, cube, &self.params)?)))
            .collect::<Result<Vec<_>>>()?;
        for (label, m) in scored {
            match self.methods.iter_mut().find(|(l, _)| l == label) {
                Some((_, v)) => v.push(m),
                None => self.methods.push((label.to_string(), vec![m])),
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<MetricsReport> {
        if self.methods.is_empty() {
            return Err(invalid("no methods to report"));
        }
        let mut rows: Vec<MethodRow> = self
            .methods
            .into_iter()
            .map(|(method, per_cube)| {
                let n = per_cube.len();
                let finite: Vec<f64> = per_cube.iter().filter_map(|m| m.psnr_db.db()).collect();
                let psnr_db = if finite.is_empty() {
                    Psnr::Identical
                } else {
                    Psnr::Db(finite.iter().sum::<f64>() / finite.len() as f64)
                };
                MethodRow {
                    method,
                    n_images: n,
                    psnr_db,
                    scc: per_cube.iter().map(|m| m.scc).sum::<f64>() / n as f64,
                    ssim: per_cube.iter().map(|m| m.ssim).sum::<f64>() / n as f64,
                    lpips: None,
                    best_psnr: false,
                    best_scc: false,
                    best_ssim: false,
                    per_cube,
                }
            })
            .collect();
        let best_psnr = rows.iter().map(|r| r.psnr_db.rank()).fold(f64::NEG_INFINITY, f64::max);
        let best_scc = rows.iter().map(|r| r.scc).fold(f64::NEG_INFINITY, f64::max);
        let best_ssim = rows.iter().map(|r| r.ssim).fold(f64::NEG_INFINITY, f64::max);
        for r in &mut rows {
            r.best_psnr = r.psnr_db.rank() == best_psnr;
            r.best_scc = r.scc == best_scc;
            r.best_ssim = r.ssim == best_ssim;
        }
        Ok(MetricsReport { band_id: self.band_id, rows })
    }
}

/// Single-image evaluation of labelled reconstructions against `reference`.
pub fn evaluate(reference: &Cube, tests: &[(&str, &Cube)]) -> Result<MetricsReport> {
    let mut ev = Evaluator::new(None);
    ev.add(reference, tests)?;
    ev.finish()
}

impl MetricsReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub const CSV_HEADER: &'static str = "band,method,psnr_db,scc,ssim,n_images";

    pub fn to_csv(&self) -> String {
        let band = self.band_id.map(|b| b.to_string()).unwrap_or_default();
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let method = if r.method.contains([',', '"', '\n']) {
                format!("\"{}\"", r.method.replace('"', "\"\""))
            } else {
                r.method.clone()
            };
            let _ = writeln!(out, "{band},{method},{},{:.6},{:.6},{}", r.psnr_db, r.scc, r.ssim, r.n_images);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, h: usize, w: usize) -> Cube {
        let data = (0..c * h * w).map(|i| ((i * 37 + 11) % 101) as f32 / 101.0).collect();
        Cube::from_vec(c, h, w, data).unwrap()
    }

    #[test]
    fn perfect_method_wins_everything() {
        let r = ramp(3, 16, 16);
        let noisy = r.map(|v| v * 0.9 + 0.05);
        let rep = evaluate(&r, &[("bicubic", &noisy), ("model", &r)]).unwrap();
        let m = rep.row("model").unwrap();
        assert!(m.best_psnr && m.best_scc && m.best_ssim);
        assert_eq!(m.psnr_db, Psnr::Identical);
        let b = rep.row("bicubic").unwrap();
        assert!(!b.best_psnr && !b.best_ssim);
    }

    #[test]
    fn single_method_single_row() {
        let r = ramp(2, 12, 12);
        let rep = evaluate(&r, &[("only", &r)]).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.to_csv().lines().count(), 2);
    }

    #[test]
    fn json_round_trip() {
        let r = ramp(2, 12, 12);
        let t = r.map(|v| v * 0.5);
        let mut ev = Evaluator::new(Some(7));
        ev.add(&r, &[("half", &t), ("same", &r)]).unwrap();
        ev.add(&r, &[("half", &t), ("same", &r)]).unwrap();
        let rep = ev.finish().unwrap();
        assert_eq!(rep.row("half").unwrap().n_images, 2);
        let back: MetricsReport = serde_json::from_str(&rep.to_json().unwrap()).unwrap();
        assert_eq!(back, rep);
        assert!(rep.to_json().unwrap().contains("\"lpips\": null"));
        assert!(rep.to_csv().starts_with("band,method,psnr_db,scc,ssim,n_images\n7,half,"));
    }

    #[test]
    fn mismatched_dims_rejected() {
        let r = ramp(2, 12, 12);
        let t = ramp(2, 12, 13);
        assert!(evaluate(&r, &[("x", &t)]).is_err());
    }
}
