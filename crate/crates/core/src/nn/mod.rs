//! Dense kernels with explicit backward passes, cross-entropy, and Adam.

mod adam;
mod linear;
mod loss;
mod matrix;
mod ops;

pub use adam::{AdamConfig, AdamState};
pub use linear::{Linear, LinearGrad};
pub use loss::{cross_entropy, log_softmax, one_hot, softmax, softmax_cross_entropy};
pub use matrix::Matrix;
pub use ops::{dropout, dropout_backward, relu, relu_backward, DropoutMask};
