use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::Tensor4;
use crate::error::{shape, Result};

use super::config::ModelConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseLayer {
    /// `[C, C, 1, 1]`
    pub weight: Tensor4<f32>,
    /// `[1, C, 1, 1]`
    pub bias: Tensor4<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DscModule {
    /// `[C, 1, k, k]`
    pub dw_weight: Tensor4<f32>,
    /// `[1, C, 1, 1]`
    pub dw_bias: Tensor4<f32>,
    pub pointwise: Vec<PointwiseLayer>,
}

/// All trainable arrays of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: ModelConfig,
    pub modules: Vec<DscModule>,
}

/// Shapes of every tensor in declaration order: per stored module the
/// depthwise weight and bias, then each pointwise weight and bias.
pub fn tensor_shapes(config: &ModelConfig) -> Vec<[usize; 4]> {
    let (c, k) = (config.channels, config.dw_kernel);
    let mut shapes = Vec::new();
    for _ in 0..config.stored_modules() {
        shapes.push([c, 1, k, k]);
        shapes.push([1, c, 1, 1]);
        for _ in 0..config.pointwise_per_module {
            shapes.push([c, c, 1, 1]);
            shapes.push([1, c, 1, 1]);
        }
    }
    shapes
}

impl ModelWeights {
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let tensors = tensor_shapes(config).into_iter().map(Tensor4::zeros).collect();
        Self::from_tensors(config, tensors)
    }

    pub fn from_tensors(config: &ModelConfig, tensors: Vec<Tensor4<f32>>) -> Result<Self> {
        config.validate()?;
        let shapes = tensor_shapes(config);
        if tensors.len() != shapes.len() {
            return Err(shape(format!("expected {} tensors, got {}", shapes.len(), tensors.len())));
        }
        for (i, (t, s)) in tensors.iter().zip(&shapes).enumerate() {
            if t.dims() != *s {
                return Err(shape(format!("tensor {i} has dims {:?}, expected {s:?}", t.dims())));
            }
        }
        let mut it = tensors.into_iter();
        let modules = (0..config.stored_modules())
            .map(|_| {
                let dw_weight = it.next().unwrap();
                let dw_bias = it.next().unwrap();
                let pointwise = (0..config.pointwise_per_module)
                    .map(|_| PointwiseLayer { weight: it.next().unwrap(), bias: it.next().unwrap() })
                    .collect();
                DscModule { dw_weight, dw_bias, pointwise }
            })
            .collect();
        Ok(ModelWeights { config: *config, modules })
    }

    pub fn tensors(&self) -> Vec<&Tensor4<f32>> {
        let mut out = Vec::new();
        for m in &self.modules {
            out.push(&m.dw_weight);
            out.push(&m.dw_bias);
            for p in &m.pointwise {
                out.push(&p.weight);
                out.push(&p.bias);
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor4<f32>> {
        let mut out = Vec::new();
        for m in &mut self.modules {
            out.push(&mut m.dw_weight);
            out.push(&mut m.dw_bias);
            for p in &mut m.pointwise {
                out.push(&mut p.weight);
                out.push(&mut p.bias);
            }
        }
        out
    }

    pub fn into_tensors(self) -> Vec<Tensor4<f32>> {
        let mut out = Vec::new();
        for m in self.modules {
            out.push(m.dw_weight);
            out.push(m.dw_bias);
            for p in m.pointwise {
                out.push(p.weight);
                out.push(p.bias);
            }
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, m) in self.modules.iter().enumerate() {
            out.push(format!("m{i}.dw.weight"));
            out.push(format!("m{i}.dw.bias"));
            for j in 0..m.pointwise.len() {
                out.push(format!("m{i}.pw{j}.weight"));
                out.push(format!("m{i}.pw{j}.bias"));
            }
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    /// Fails with `ShapeMismatch` unless the weights were built for `channels` channels.
    pub fn check_channels(&self, channels: usize) -> Result<()> {
        if self.config.channels != channels {
            return Err(shape(format!(
                "weights are for {} channels, data has {channels}",
                self.config.channels
            )));
        }
        Ok(())
    }
}

/// Fan-in scaled uniform initialization `U(−√(6/fan_in), √(6/fan_in))`,
/// zero biases. Fan-in is `k²` for depthwise and `C` for pointwise layers.
pub fn init_weights(config: &ModelConfig, seed: u64) -> Result<ModelWeights> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = ModelWeights::zeros(config)?;
    let (c, k) = (config.channels, config.dw_kernel);
    let mut fill = |t: &mut Tensor4<f32>, fan_in: usize| {
        let bound = (6.0 / fan_in as f64).sqrt() as f32;
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        for v in t.data_mut() {
            *v = dist.sample(&mut rng);
        }
    };
    for m in &mut weights.modules {
        fill(&mut m.dw_weight, k * k);
        for p in &mut m.pointwise {
            fill(&mut p.weight, c);
        }
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::param_count;

    #[test]
    fn init_rules() {
        let cfg = ModelConfig::dscr(6);
        let w = init_weights(&cfg, 3).unwrap();
        assert_eq!(w, init_weights(&cfg, 3).unwrap());
        assert_ne!(w, init_weights(&cfg, 4).unwrap());
        let bound = (6.0f32 / 25.0).sqrt();
        for m in &w.modules {
            assert!(m.dw_bias.data().iter().all(|&v| v == 0.0));
            assert!(m.dw_weight.data().iter().all(|&v| v.abs() <= bound));
            for p in &m.pointwise {
                assert!(p.bias.data().iter().all(|&v| v == 0.0));
                assert!(p.weight.data().iter().all(|&v| v.abs() <= 1.0));
            }
        }
        assert_eq!(w.n_params(), param_count(&cfg));
    }

    #[test]
    fn shared_stores_one_module() {
        let cfg = ModelConfig { share_module_weights: true, ..ModelConfig::dscr(4) };
        let w = init_weights(&cfg, 0).unwrap();
        assert_eq!(w.modules.len(), 1);
        assert_eq!(w.n_params(), param_count(&cfg));
    }

    #[test]
    fn channel_check() {
        let w = ModelWeights::zeros(&ModelConfig::dscr_small(497)).unwrap();
        assert!(w.check_channels(497).is_ok());
        assert!(matches!(w.check_channels(480), Err(crate::Error::ShapeMismatch(_))));
    }
}
