use crate::autograd::{Tape, Tensor4, Var};
use crate::error::{shape, Result};
use crate::hsdata::Cube;
use crate::par::for_each_chunk_mut;
use crate::real::Real;
use crate::resample::bicubic_plane;

use super::config::ModelConfig;
use super::weights::{tensor_shapes, ModelWeights};

/// Bicubic upsampling of every `(batch, channel)` plane.
pub fn bicubic_tensor<T: Real>(x: &Tensor4<T>, scale: usize) -> Tensor4<T> {
    let [b, c, h, w] = x.dims();
    let mut out = Tensor4::zeros([b, c, h * scale, w * scale]);
    for_each_chunk_mut(out.data_mut(), h * w * scale * scale, |plane, dst| {
        dst.copy_from_slice(&bicubic_plane(&x.data()[plane * h * w..(plane + 1) * h * w], h, w, scale));
    });
    out
}

/// Records the network on `tape`.
///
/// `params` are the weight leaves in declaration order (see
/// [`tensor_shapes`]). The bicubic base is computed once and used both as the
/// input to the DSC stack and as the residual term.
pub fn forward_graph<T: Real>(
    tape: &mut Tape<T>,
    config: &ModelConfig,
    params: &[Var],
    input: &Tensor4<T>,
) -> Result<Var> {
    config.validate()?;
    let expected = tensor_shapes(config);
    if params.len() != expected.len() {
        return Err(shape(format!("expected {} parameter tensors, got {}", expected.len(), params.len())));
    }
    if input.dims()[1] != config.channels {
        return Err(shape(format!(
            "input has {} channels, model expects {}",
            input.dims()[1],
            config.channels
        )));
    }
    let base = tape.constant(bicubic_tensor(input, config.scale));
    let per_module = 2 + 2 * config.pointwise_per_module;
    let mut h = base;
    for layer in 0..config.n_modules {
        let stored = if config.share_module_weights { 0 } else { layer };
        let p = &params[stored * per_module..(stored + 1) * per_module];
        h = tape.depthwise_conv(h, p[0], p[1])?;
        h = tape.relu(h);
        for j in 0..config.pointwise_per_module {
            h = tape.pointwise_conv(h, p[2 + 2 * j], p[3 + 2 * j])?;
            let last_in_module = j + 1 == config.pointwise_per_module;
            let last_layer = layer + 1 == config.n_modules;
            if !(last_in_module && last_layer && config.final_linear) {
                h = tape.relu(h);
            }
        }
    }
    tape.add(base, h)
}

/// Inference: `[B, C, h, w]` LR input to `[B, C, s·h, s·w]` SR output.
pub fn forward(weights: &ModelWeights, lr_input: &Tensor4<f32>) -> Result<Tensor4<f32>> {
    let mut tape = Tape::new();
    let params: Vec<Var> = weights.tensors().into_iter().map(|t| tape.constant(t.clone())).collect();
    let out = forward_graph(&mut tape, &weights.config, &params, lr_input)?;
    Ok(tape.value(out).clone())
}

/// Stacks equally sized cubes into a batch.
pub fn cube_to_tensor(cubes: &[&Cube]) -> Result<Tensor4<f32>> {
    let first = cubes.first().ok_or_else(|| shape("empty batch"))?;
    let (c, h, w) = first.dims();
    let mut data = Vec::with_capacity(cubes.len() * c * h * w);
    for cube in cubes {
        if cube.dims() != (c, h, w) {
            return Err(shape(format!("batch mixes {:?} and {:?}", (c, h, w), cube.dims())));
        }
        data.extend_from_slice(cube.data());
    }
    Tensor4::from_vec([cubes.len(), c, h, w], data)
}

pub fn tensor_to_cube(t: &Tensor4<f32>, batch_index: usize) -> Cube {
    let [_, c, h, w] = t.dims();
    let n = c * h * w;
    Cube::from_vec(c, h, w, t.data()[batch_index * n..(batch_index + 1) * n].to_vec()).expect("consistent dims")
}
