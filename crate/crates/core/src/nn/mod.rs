//! Dense feed-forward networks with hand-written backpropagation.

mod activation;
mod io;
mod loss;
mod network;
mod optim;

pub use activation::ActivationKind;
pub use io::{load_network, read_network, save_network, write_network, FORMAT_VERSION};
pub use loss::mse_loss_and_grad;
pub use network::{ForwardTrace, Gradients, Layer, Network};
pub use optim::{Optimizer, OptimizerKind};
