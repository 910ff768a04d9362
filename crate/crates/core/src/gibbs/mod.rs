//! Gibbs sampler: closed-form conditionals, the joint node update, the scan
//! and the chain runner.

pub mod conditionals;
pub mod diagnostics;
pub mod slab;
mod sweep;

pub use conditionals::{
    cond_delta, cond_gamma_y, cond_gamma_z, cond_l, cond_lambda_r, cond_mu_y, cond_mu_z, cond_pi_r, cond_tau_y2,
    cond_tau_z2, cond_zeta, BetaParams, InvGammaParams, InvWishartParams, MvnParams, NetworkStats, NormalParams,
};
pub use diagnostics::{chain_ess, effective_sample_size, EssReport};
pub use slab::{cond_eta_v, cond_xi_v, SlabPosterior};
pub use sweep::{run_chain, Block, Sampler, SweepPlan, LATENT_WARMUP};
