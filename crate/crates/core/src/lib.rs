//! Feed-forward classifiers trained with group-sparse penalties.
//!
//! A sparse group Lasso penalty over the outgoing weights of every input and
//! hidden neuron lets one training run fit the weights, switch off whole
//! hidden neurons, and drop input features. After training, small weights are
//! thresholded to zero and dead neurons are removed without changing the
//! network's function.
//!
//! - [`network`]: model, forward pass, loss and backpropagation
//! - [`penalties`]: group partition, penalty values and subgradients
//! - [`optimizer`]: Adam and the mini-batch training loop
//! - [`pruning`]: thresholding, sparsity metrics and compaction
//! - [`data`]: loaders, normalization, splits, batches
//! - [`experiment`]: seeded repeats, λ sweeps, reports, model files, feature maps

pub mod data;
pub mod error;
pub mod experiment;
pub mod network;
pub mod optimizer;
pub mod penalties;
pub mod pruning;
mod rng;

pub use data::Dataset;
pub use error::{Error, Result};
pub use network::Network;
pub use optimizer::TrainConfig;
pub use penalties::{BiasMode, GroupPartition, PenaltyKind};
pub use pruning::PruneReport;
