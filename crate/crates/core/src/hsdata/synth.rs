use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::resample::{blur_plane_clamped, gaussian_taps};

use super::cube::Cube;

pub const SYNTH_LO: f32 = 0.1;
pub const SYNTH_HI: f32 = 0.9;

fn smooth_noise(rng: &mut ChaCha8Rng, height: usize, width: usize, taps: &[f64]) -> Vec<f32> {
    let noise: Vec<f32> = (0..height * width).map(|_| rng.sample(StandardNormal)).collect();
    blur_plane_clamped(&noise, height, width, taps, taps)
}

/// Generates a desk-scale stand-in for a radiance cube.
///
/// Every channel is `mix · base + (1 − mix) · own`, where `base` and `own`
/// are Gaussian-blurred white-noise fields; each channel is then mapped
/// affinely onto `[0.1, 0.9]`. The shared base field gives the channels the
/// strong mutual correlation that real spectra exhibit.
pub fn synth_cube(
    n_channels: usize,
    height: usize,
    width: usize,
    seed: u64,
    spatial_sigma: f64,
    channel_mix: f64,
) -> Result<Cube> {
    if n_channels == 0 || height < 8 || width < 8 {
        return Err(invalid(format!(
            "synthetic cube needs C >= 1 and H, W >= 8, got {n_channels}x{height}x{width}"
        )));
    }
    if !(spatial_sigma > 0.0 && spatial_sigma.is_finite()) {
        return Err(invalid(format!("spatial_sigma must be positive, got {spatial_sigma}")));
    }
    if !(0.0..=1.0).contains(&channel_mix) {
        return Err(invalid(format!("channel_mix must lie in [0, 1], got {channel_mix}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = gaussian_taps(spatial_sigma, 3.0);
    let base = smooth_noise(&mut rng, height, width, &taps);
    let mix = channel_mix as f32;

    let mut data = Vec::with_capacity(n_channels * height * width);
    for _ in 0..n_channels {
        let own = smooth_noise(&mut rng, height, width, &taps);
        let plane: Vec<f32> = base.iter().zip(&own).map(|(&b, &o)| mix * b + (1.0 - mix) * o).collect();
        let (lo, hi) = plane
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        if span > 0.0 {
            let scale = (SYNTH_HI - SYNTH_LO) / span;
            data.extend(plane.iter().map(|&v| (SYNTH_LO + (v - lo) * scale).clamp(SYNTH_LO, SYNTH_HI)));
        } else {
            data.extend(std::iter::repeat_n(0.5 * (SYNTH_LO + SYNTH_HI), plane.len()));
        }
    }
    Cube::from_vec(n_channels, height, width, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &[f32], b: &[f32]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (&x, &y) in a.iter().zip(b) {
            let (dx, dy) = (x as f64 - ma, y as f64 - mb);
            sab += dx * dy;
            saa += dx * dx;
            sbb += dy * dy;
        }
        sab / (saa * sbb).sqrt()
    }

    #[test]
    fn deterministic() {
        let a = synth_cube(4, 32, 24, 11, 2.5, 0.7).unwrap();
        let b = synth_cube(4, 32, 24, 11, 2.5, 0.7).unwrap();
        assert_eq!(a, b);
        let c = synth_cube(4, 32, 24, 12, 2.5, 0.7).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn value_range() {
        let a = synth_cube(3, 20, 20, 1, 1.5, 0.3).unwrap();
        assert!(a.data().iter().all(|&v| (SYNTH_LO..=SYNTH_HI).contains(&v)));
    }

    #[test]
    fn full_mix_gives_equal_channels() {
        let a = synth_cube(5, 24, 24, 3, 2.0, 1.0).unwrap();
        for c in 1..5 {
            for (x, y) in a.plane(0).iter().zip(a.plane(c)) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn strong_mix_correlates_channels() {
        let a = synth_cube(8, 64, 64, 5, 2.0, 0.9).unwrap();
        let mut total = 0.0;
        let mut n = 0;
        for i in 0..8 {
            for j in i + 1..8 {
                total += pearson(a.plane(i), a.plane(j));
                n += 1;
            }
        }
        assert!(total / n as f64 > 0.5);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(synth_cube(4, 7, 16, 0, 1.0, 0.5).is_err());
        assert!(synth_cube(4, 16, 16, 0, 0.0, 0.5).is_err());
        assert!(synth_cube(4, 16, 16, 0, 1.0, 1.5).is_err());
    }
}
