//! The depthwise-separable residual super-resolution network.

mod config;
mod forward;
mod io;
mod weights;

pub use config::{param_count, ModelConfig};
pub use forward::{bicubic_tensor, cube_to_tensor, forward, forward_graph, tensor_to_cube};
pub use io::{decode_weights, encode_weights, load_weights, save_weights, DSCW_MAGIC, DSCW_VERSION};
pub use weights::{init_weights, tensor_shapes, DscModule, ModelWeights, PointwiseLayer};
