//! Domain types and deterministic model algebra shared by every other module.

pub mod algebra;
pub mod chain;
pub mod config;
pub mod data;
pub mod hyper;
pub mod kernel;
pub mod state;

pub use algebra::{attribute_residuals, beta_from_latent, beta_vector, latent_layer, network_residuals};
pub use chain::Chain;
pub use config::{AttributeConditioning, SamplerConfig};
pub use data::{
    devectorize_upper, distance, pair_count, pair_index, pairs, unordered_pair_index, vectorize_upper, Dataset, Point3,
};
pub use hyper::Hyperparameters;
pub use kernel::{KernelMatrix, KernelSet};
pub use state::{ModelState, LAMBDA_VALUES};
