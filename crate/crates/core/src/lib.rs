//! Reward-scaling laboratory for actor-critic reinforcement learning with
//! rectifier networks.
//!
//! The crate is organised around the pieces needed to study how reward scale
//! interacts with ReLU value networks:
//!
//! - [`nn`]: dense networks with explicit backpropagation, activations, MSE and
//!   the SGD / Adam / RMSprop optimizers, plus a text serialization format.
//! - [`diagnostics`]: pseudo-dying ReLU masks and per-layer PDRR reports.
//! - [`scaling`]: exact output scaling of homogeneous networks and the
//!   post-scale gradient clipping schedule.
//! - [`ans`]: the adaptive network scaling controller.
//! - [`popart`]: the Pop-Art output-normalization baseline.
//! - [`envs`], [`agents`]: toy environments, reward wrappers, A2C and DDPG.
//! - [`theory`]: revival-probability bounds for pseudo-dying neurons and a
//!   Monte-Carlo check of them.
//! - [`harness`]: experiment configs, seeded trials, evaluation and CSV output.

pub mod agents;
pub mod ans;
pub mod diagnostics;
pub mod envs;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod nn;
pub mod popart;
pub mod scaling;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::Matrix;
