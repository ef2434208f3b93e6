//! Dense reverse-mode engine: tensors, layer stacks, softmax cross-entropy,
//! SGD, finite-difference checking and checkpoints.

mod checkpoint;
mod gradcheck;
mod network;
mod ops;
mod optim;
mod params;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, MAGIC};
pub use gradcheck::{random_gradcheck, GradcheckSummary, KINK_MARGIN, RELATIVE_FLOOR, finite_difference_grad, finite_difference_grad_weighted, DEFAULT_EPSILON};
pub use network::{Layer, NetworkSpec};
pub use ops::{argmax_rows, backward, forward, loss_softmax_xent, softmax_row, ForwardTrace, Reduction};
pub use optim::{sgd_step, OptimizerConfig};
pub use params::{init_params, Gradients, ParameterSet};
pub use tensor::Tensor;
