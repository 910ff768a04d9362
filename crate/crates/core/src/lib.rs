//! Joint Bayesian regression of multi-subject network data and spatially
//! correlated nodal attributes on a scalar predictor.
//!
//! Each subject contributes a symmetric, zero-diagonal `V × V` network and a
//! length-`V` attribute vector measured at nodes with known 3-D coordinates.
//! Edge effects of the predictor are modelled through a low-rank bilinear
//! form `β(u,v) = Σ_r λ_r θ_r(u) θ_r(v)`, attribute effects through `α(v)`,
//! and a node-level spike-and-slab prior on `(α(v), θ(v))` shares one
//! inclusion indicator `η_v` between the two responses. Attribute residuals
//! carry a Gaussian-process random effect with exponential kernel.
//!
//! Posterior inference is a Gibbs sampler ([`gibbs`]); [`simulate`] and
//! [`harness`] reproduce a replicated simulation study, and [`summarize`]
//! turns chains into selection tables, interval estimates, spatial
//! correlation curves and posterior predictions.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod geweke;
pub mod gibbs;
pub mod harness;
pub mod io;
pub mod model;
pub mod simulate;
pub mod summarize;

pub use error::{Error, Result};
pub use model::{Chain, Dataset, Hyperparameters, KernelMatrix, ModelState};
