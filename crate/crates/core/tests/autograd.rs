use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dscr_core::autograd::kernels::{depthwise_backward, depthwise_forward, pointwise_backward, pointwise_forward};
use dscr_core::autograd::{grad_check, grad_check_graph, Evaluation, GradCheckOptions, Tape, Tensor4, Var};
use dscr_core::model::{forward_graph, init_weights, ModelConfig};

fn rand_tensor(dims: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor4<f64> {
    Tensor4::from_fn(dims, |_| rng.random_range(-1.0..1.0))
}

/// Zero-padded "same" depthwise correlation, written as plain loops.
fn naive_depthwise(x: &Tensor4<f64>, w: &Tensor4<f64>, b: &Tensor4<f64>) -> Tensor4<f64> {
    let [bn, c, h, wd] = x.dims();
    let k = w.dims()[2];
    let r = (k / 2) as isize;
    let mut out = Tensor4::zeros(x.dims());
    for n in 0..bn {
        for ch in 0..c {
            for y in 0..h as isize {
                for xx in 0..wd as isize {
                    let mut acc = b.data()[ch];
                    for i in 0..k as isize {
                        for j in 0..k as isize {
                            let (sy, sx) = (y + i - r, xx + j - r);
                            if sy >= 0 && sy < h as isize && sx >= 0 && sx < wd as isize {
                                acc += w.at(ch, 0, i as usize, j as usize) * x.at(n, ch, sy as usize, sx as usize);
                            }
                        }
                    }
                    let idx = out.index(n, ch, y as usize, xx as usize);
                    out.data_mut()[idx] = acc;
                }
            }
        }
    }
    out
}

/// Per-pixel matrix-vector product.
fn naive_pointwise(x: &Tensor4<f64>, w: &Tensor4<f64>, b: &Tensor4<f64>) -> Tensor4<f64> {
    let [bn, cin, h, wd] = x.dims();
    let cout = w.dims()[0];
    let mut out = Tensor4::zeros([bn, cout, h, wd]);
    for n in 0..bn {
        for y in 0..h {
            for xx in 0..wd {
                for o in 0..cout {
                    let mut acc = b.data()[o];
                    for i in 0..cin {
                        acc += w.at(o, i, 0, 0) * x.at(n, i, y, xx);
                    }
                    let idx = out.index(n, o, y, xx);
                    out.data_mut()[idx] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn depthwise_matches_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (c, h, w, k) in [(1, 5, 7, 3), (3, 8, 6, 5), (2, 3, 3, 5), (4, 9, 9, 1)] {
        let x = rand_tensor([2, c, h, w], &mut rng);
        let wt = rand_tensor([c, 1, k, k], &mut rng);
        let b = rand_tensor([1, c, 1, 1], &mut rng);
        let got = depthwise_forward(&x, &wt, &b);
        assert!(got.max_abs_diff(&naive_depthwise(&x, &wt, &b)) < 1e-12);
        let got32 = depthwise_forward(&x.cast::<f32>(), &wt.cast::<f32>(), &b.cast::<f32>());
        assert!(got32.cast::<f64>().max_abs_diff(&naive_depthwise(&x, &wt, &b)) < 1e-5);
    }
}

#[test]
fn pointwise_matches_matmul_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (cin, cout) in [(1, 1), (3, 5), (6, 2)] {
        let x = rand_tensor([2, cin, 4, 5], &mut rng);
        let w = rand_tensor([cout, cin, 1, 1], &mut rng);
        let b = rand_tensor([1, cout, 1, 1], &mut rng);
        assert!(pointwise_forward(&x, &w, &b).max_abs_diff(&naive_pointwise(&x, &w, &b)) < 1e-12);
    }
}

#[test]
fn linear_graph_gradients_are_exact() {
    // pointwise then mse: quadratic in the weights, so central differences are exact
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = rand_tensor([1, 3, 4, 4], &mut rng);
    let t = rand_tensor([1, 2, 4, 4], &mut rng);
    let report = grad_check_graph(
        &["w", "b"],
        &[rand_tensor([2, 3, 1, 1], &mut rng), rand_tensor([1, 2, 1, 1], &mut rng)],
        |tape: &mut Tape<f64>, p: &[Var]| {
            let xv = tape.constant(x.clone());
            let y = tape.pointwise_conv(xv, p[0], p[1])?;
            let tv = tape.constant(t.clone());
            tape.mse_loss(y, tv)
        },
        &GradCheckOptions::default(),
    );
    assert!(report.passed, "{report}");
    assert!(report.max_rel_error() < 1e-10, "{report}");
}

/// Evaluation with hand-wired kernels; `corrupt` transposes each dw gradient kernel.
fn depthwise_mse_eval<'a>(
    x: &'a Tensor4<f64>,
    target: &'a Tensor4<f64>,
    corrupt: bool,
) -> impl FnMut(&[Tensor4<f64>], bool) -> dscr_core::Result<Evaluation> + 'a {
    move |p, want| {
        let y = depthwise_forward(x, &p[0], &p[1]);
        let n = y.len() as f64;
        let loss = y.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
        let grads = want.then(|| {
            let dout = Tensor4::from_fn(y.dims(), |i| 2.0 * (y.data()[i] - target.data()[i]) / n);
            let (_, mut dw, db) = depthwise_backward(x, &p[0], &dout);
            if corrupt {
                let [c, _, k, _] = dw.dims();
                let orig = dw.clone();
                for ch in 0..c {
                    for i in 0..k {
                        for j in 0..k {
                            let idx = dw.index(ch, 0, i, j);
                            dw.data_mut()[idx] = orig.at(ch, 0, j, i);
                        }
                    }
                }
            }
            vec![dw, db]
        });
        Ok(Evaluation { loss, grads, signature: 0 })
    }
}

#[test]
fn transposed_depthwise_gradient_is_caught() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = rand_tensor([1, 2, 7, 7], &mut rng);
    let target = rand_tensor([1, 2, 7, 7], &mut rng);
    let params = [rand_tensor([2, 1, 3, 3], &mut rng), rand_tensor([1, 2, 1, 1], &mut rng)];
    let opts = GradCheckOptions::default();

    let good = grad_check(&["w", "b"], &params, depthwise_mse_eval(&x, &target, false), &opts);
    assert!(good.passed, "{good}");

    let bad = grad_check(&["w", "b"], &params, depthwise_mse_eval(&x, &target, true), &opts);
    assert!(!bad.passed, "corrupted rule slipped through:\n{bad}");
    assert!(!bad.tensors[0].passed && bad.tensors[1].passed);
}

#[test]
fn pointwise_backward_input_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = rand_tensor([2, 3, 3, 3], &mut rng);
    let w = rand_tensor([4, 3, 1, 1], &mut rng);
    let dout = rand_tensor([2, 4, 3, 3], &mut rng);
    let (dx, dw, db) = pointwise_backward(&x, &w, &dout);
    // dx = Wᵀ · dout per pixel
    for n in 0..2 {
        for i in 0..3 {
            for y in 0..3 {
                for xx in 0..3 {
                    let want: f64 = (0..4).map(|o| w.at(o, i, 0, 0) * dout.at(n, o, y, xx)).sum();
                    assert!((dx.at(n, i, y, xx) - want).abs() < 1e-12);
                }
            }
        }
    }
    assert_eq!(dw.dims(), [4, 3, 1, 1]);
    let want_db0: f64 = (0..2).flat_map(|n| dout.plane(n, 0).to_vec()).sum();
    assert!((db.data()[0] - want_db0).abs() < 1e-12);
}

#[test]
fn deep_graph_with_random_biases() {
    let opts = GradCheckOptions::default();
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = ModelConfig::dscr(3);
        let weights = init_weights(&config, seed).unwrap();
        let names = weights.tensor_names();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let params: Vec<Tensor4<f64>> = weights
            .tensors()
            .iter()
            .zip(&names)
            .map(|(t, name)| {
                let t = t.cast::<f64>();
                if name.ends_with("bias") {
                    Tensor4::from_fn(t.dims(), |_| rng.random_range(0.1..0.5))
                } else {
                    t
                }
            })
            .collect();
        let lr = Tensor4::from_fn([1, 3, 6, 6], |_| rng.random_range(0.0..1.0));
        let hr = Tensor4::from_fn([1, 3, 24, 24], |_| rng.random_range(0.0..1.0));
        let report = grad_check_graph(
            &names,
            &params,
            move |tape: &mut Tape<f64>, p: &[Var]| {
                let y = forward_graph(tape, &config, p, &lr)?;
                let t = tape.constant(hr.clone());
                tape.mse_loss(y, t)
            },
            &GradCheckOptions { seed, ..opts },
        );
        assert!(report.passed, "seed {seed}:\n{report}");
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let report = grad_check(
        &["w"],
        &[Tensor4::zeros([1, 1, 1, 1])],
        |_, _| Err(dscr_core::Error::TapeConsumed),
        &GradCheckOptions::default(),
    );
    assert!(!report.passed);
    assert!(report.error.is_some());
}
