//! Dense 2-D tensor engine with reverse-mode automatic differentiation and
//! an Adam optimizer.
//!
//! Everything is a row-major `rows x cols` matrix of 64-bit floats; scalars
//! are `1 x 1`. Forward operations record their inputs, so calling
//! [`backward`] on a scalar loss walks the recorded graph once and returns a
//! gradient buffer per reachable leaf that asked for one. Frozen parameters
//! (`trainable = false`) never receive gradients or optimizer updates.
//!
//! Every primitive checks its output for NaN/Inf and panics on the first
//! non-finite value: silent numeric corruption is treated as a bug, not a
//! recoverable condition.

mod backward;
mod ops;
mod tensor;

pub mod check;
pub mod fanout;
pub mod optim;
pub mod seed;

pub use backward::{backward, Gradients};
pub use ops::{
    concat_cols, mask_rows, matvec, rotary_angle, sequence_embed, sigmoid_scalar,
    softmax_cross_entropy, SeqItem,
};
pub use tensor::Tensor;

/// Scalar type used throughout the workspace.
pub type Real = f64;
