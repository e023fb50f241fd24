use serde::{Deserialize, Serialize};

use crate::autograd::Tensor4;
use crate::error::{shape, Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { beta1: BETA1, beta2: BETA2, eps: EPSILON }
    }
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f32>>,
    pub v: Vec<Vec<f32>>,
    pub t: u64,
    pub lr: f64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(sizes: &[usize], lr: f64, hyper: AdamHyper) -> Self {
        AdamState {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            lr,
            hyper,
        }
    }

    pub fn for_tensors(params: &[&Tensor4<f32>], lr: f64) -> Self {
        let sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(&sizes, lr, AdamHyper::default())
    }

    /// One bias-corrected Adam update. The step is rejected as a whole, with
    /// nothing modified, if any gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [&mut Tensor4<f32>], grads: &[Tensor4<f32>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(shape(format!(
                "adam state holds {} tensors, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(shape(format!("tensor {i}: size mismatch in adam step")));
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient { tensor: i });
            }
        }
        self.t += 1;
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (k, (theta, &gk)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                let gk = gk as f64;
                let mk = beta1 * m[k] as f64 + (1.0 - beta1) * gk;
                let vk = beta2 * v[k] as f64 + (1.0 - beta2) * gk * gk;
                m[k] = mk as f32;
                v[k] = vk as f32;
                let update = self.lr * (mk / c1) / ((vk / c2).sqrt() + eps);
                *theta = (*theta as f64 - update) as f32;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Tensor4::filled([1, 1, 1, 3], 0.5f32);
        let g = Tensor4::filled([1, 1, 1, 3], 1.0f32);
        let mut s = AdamState::for_tensors(&[&p], 1e-3);
        s.step(&mut [&mut p], &[g]).unwrap();
        for &v in p.data() {
            assert!((v as f64 - (0.5 - 1e-3)).abs() < 1e-7);
        }
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = Tensor4::from_fn([1, 2, 2, 2], |i| i as f32 * 0.1);
        let before = p.clone();
        let mut s = AdamState::for_tensors(&[&p], 1e-3);
        for _ in 0..5 {
            s.step(&mut [&mut p], &[Tensor4::zeros([1, 2, 2, 2])]).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = Tensor4::filled([1, 1, 1, 2], 1.0f32);
        let g = Tensor4::from_vec([1, 1, 1, 2], vec![0.5, f32::NAN]).unwrap();
        let mut s = AdamState::for_tensors(&[&p], 1e-3);
        assert!(matches!(s.step(&mut [&mut p], &[g]), Err(Error::NonFiniteGradient { tensor: 0 })));
        assert_eq!(s.t, 0);
        assert!(p.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn quadratic_converges() {
        // independent scalar recurrence
        let (mut theta, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for t in 1..=100 {
            let g = 2.0 * theta;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            theta -= 0.1 * mh / (vh.sqrt() + 1e-8);
        }
        assert!(theta.abs() < 0.05, "oracle theta {theta}");

        let mut p = Tensor4::scalar(1.0f32);
        let mut s = AdamState::for_tensors(&[&p], 0.1);
        for _ in 0..100 {
            let g = Tensor4::scalar(2.0 * p.item());
            s.step(&mut [&mut p], &[g]).unwrap();
        }
        assert!(p.item().abs() < 0.05);
        assert!((p.item() as f64 - theta).abs() < 1e-3);
    }
}
