//! A small reverse-mode differentiation engine covering the operators the
//! super-resolution network needs: depthwise and pointwise convolution, ReLU,
//! addition, and mean squared error.

mod gradcheck;
pub mod kernels;
mod tape;
mod tensor;

pub use gradcheck::{
    grad_check, grad_check_graph, tape_evaluation, Evaluation, GradCheckOptions, GradCheckReport, TensorCheck,
};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor4;
