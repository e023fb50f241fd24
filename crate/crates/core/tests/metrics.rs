use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use dscr_core::hsdata::Cube;
use dscr_core::metrics::{pca_rgb, scc, ssim, PcaBasis, SsimParams};

fn noise(c: usize, n: usize, seed: u64) -> Cube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Cube::from_vec(c, n, n, (0..c * n * n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect()).unwrap()
}

#[test]
fn binary_pattern_inverted_has_negative_ssim() {
    let data: Vec<f32> = (0..16 * 16).map(|i| if (i / 16 + i % 16) % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let x = Cube::from_vec(1, 16, 16, data).unwrap();
    let s = ssim(&x, &x.map(|v| 1.0 - v), &SsimParams::default()).unwrap();
    assert!(s < 0.0, "{s}");
}

#[test]
fn scc_of_independent_noise_is_small() {
    for seed in 0..5 {
        let v = scc(&noise(2, 64, seed), &noise(2, 64, 100 + seed)).unwrap();
        assert!(v.abs() < 0.1, "seed {seed}: {v}");
    }
}

#[test]
fn scc_ignores_offsets() {
    let x = noise(3, 32, 1);
    assert!((scc(&x, &x.map(|v| v + 0.3)).unwrap() - 1.0).abs() < 1e-6);
}

/// Three uncorrelated channels with distinct variances: the covariance is
/// diagonal, so the principal axes are the channel axes in variance order.
#[test]
fn pca_of_uncorrelated_channels_is_a_permutation() {
    let n = 32;
    let base = noise(3, n, 7);
    let mut planes = Vec::new();
    for (c, scale) in [(0usize, 1.0f32), (1, 3.0), (2, 2.0)] {
        let p = base.plane(c);
        let mean = p.iter().sum::<f32>() / p.len() as f32;
        planes.push(p.iter().map(|v| (v - mean) * scale).collect::<Vec<_>>());
    }
    // decorrelate exactly (Gram-Schmidt on the centered planes)
    let dot = |a: &[f32], b: &[f32]| a.iter().zip(b).map(|(x, y)| (*x as f64) * (*y as f64)).sum::<f64>();
    for i in 1..3 {
        for j in 0..i {
            let r = dot(&planes[i], &planes[j]) / dot(&planes[j], &planes[j]);
            let pj = planes[j].clone();
            planes[i].iter_mut().zip(&pj).for_each(|(x, y)| *x -= (r * *y as f64) as f32);
        }
    }
    let cube = Cube::from_planes(n, n, &planes).unwrap();
    let basis = PcaBasis::fit(&cube).unwrap();
    let order: Vec<usize> = basis
        .components
        .iter()
        .map(|v| {
            let (i, m) = v.iter().enumerate().fold((0, 0.0f64), |b, (i, &x)| if x.abs() > b.1 { (i, x.abs()) } else { b });
            assert!((m - 1.0).abs() < 1e-4, "component not axis-aligned: {v:?}");
            i
        })
        .collect();
    let var: Vec<f64> = planes.iter().map(|p| dot(p, p)).collect();
    let mut want: Vec<usize> = (0..3).collect();
    want.sort_by(|&a, &b| var[b].total_cmp(&var[a]));
    assert_eq!(order, want);

    // each output colour is the stretched input channel (sign fixed positive)
    let img = pca_rgb(&cube, &cube).unwrap();
    for (k, &ch) in order.iter().enumerate() {
        let p = cube.plane(ch);
        let (lo, hi) = p.iter().fold((f32::MAX, f32::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        for (i, &v) in p.iter().enumerate() {
            let want = 255.0 * (v - lo) / (hi - lo);
            assert!((img.data[3 * i + k] as f32 - want).abs() <= 1.01, "channel {ch} pixel {i}");
        }
    }
}
