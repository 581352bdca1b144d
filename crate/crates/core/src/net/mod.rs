//! Small feedforward networks: dense, conv2d and flatten layers with
//! backprop, plain SGD, dropout and synapse masks.
//!
//! Every forward sum is taken in a canonical order, so permuting a layer's
//! units (with the matching permutation of the next layer's inputs) or
//! adding zero-weight synapses leaves outputs bit-for-bit unchanged.

mod backward;
mod forward;
mod layer;
mod network;
mod tensor;
mod train;

pub(crate) use backward::loss_from_output;
pub use backward::{batch_loss, loss_and_gradients, sgd_step, Gradients, LossKind, Targets};
pub(crate) use forward::forward_ablated;
pub use forward::{apply_dropout, forward, forward_trace, DropoutSpec, Mode, Trace};
pub use layer::{Activation, Layer, LayerSpec, Shape};
pub(crate) use network::sample_weight;
pub use network::{init_bound, init_layer, Network};
pub use tensor::Matrix;
pub use train::{
    argmax, evaluate, evaluate_with, train_few_epochs, EpochStats, TrainConfig, TrainOutcome,
};
