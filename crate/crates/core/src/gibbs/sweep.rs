use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::conditionals::{
    cond_delta, cond_gamma_y, cond_gamma_z, cond_l, cond_mu_y, cond_mu_z, cond_pi_r, cond_tau_y2, cond_tau_z2,
    lambda_log_weights, zeta_log_weights, NetworkStats,
};
use super::slab::{attribute_base, attribute_rows, inclusion_probability, slab_posterior, SlabPrior};
use crate::distributions::{
    bernoulli_draw, beta_draw, categorical_draw, dirichlet_draw, inv_gamma_draw, inv_wishart_draw, mvn_draw,
    normal_draw, StreamRng,
};
use crate::error::{Error, Result};
use crate::model::{
    latent_layer, Chain, Dataset, Hyperparameters, KernelMatrix, KernelSet, ModelState, SamplerConfig, LAMBDA_VALUES,
};

/// One parameter block of the Gibbs scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Zeta,
    TauZ2,
    TauY2,
    MuY,
    MuZ,
    GammaY,
    GammaZ,
    L,
    Delta,
    /// `(π_r, λ_r)` for `r = 1…R`.
    Components,
    /// `(ξ_v, η_v)` for `v = 1…V`.
    Nodes,
}

/// Fixed scan order; every block appears exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPlan {
    blocks: Vec<Block>,
}

impl SweepPlan {
    pub const DEFAULT_ORDER: [Block; 11] = [
        Block::Zeta,
        Block::TauZ2,
        Block::TauY2,
        Block::MuY,
        Block::MuZ,
        Block::GammaY,
        Block::GammaZ,
        Block::L,
        Block::Delta,
        Block::Components,
        Block::Nodes,
    ];

    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        for b in Self::DEFAULT_ORDER {
            let count = blocks.iter().filter(|&&x| x == b).count();
            if count != 1 {
                return Err(Error::invalid(format!("block {b:?} appears {count} times in sweep plan")));
            }
        }
        if blocks.len() != Self::DEFAULT_ORDER.len() {
            return Err(Error::invalid("sweep plan has unknown blocks"));
        }
        Ok(SweepPlan { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan { blocks: Self::DEFAULT_ORDER.to_vec() }
    }
}

/// Burn-in sweeps during which `(π_r, λ_r)` keep their initial values,
/// capped at half the burn-in.
///
/// `λ_r` only changes sign together with `θ_r`, which a single-site scan
/// cannot do, so the signs drawn from near-zero initial `θ` would persist
/// for the whole chain.
pub const LATENT_WARMUP: usize = 50;

/// A dataset, its precomputed kernels and the sampler settings.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    data: &'a Dataset,
    hyper: &'a Hyperparameters,
    config: SamplerConfig,
    kernels: KernelSet,
    zeta_values: Vec<f64>,
    plan: SweepPlan,
    warmup: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(data: &'a Dataset, hyper: &'a Hyperparameters, config: SamplerConfig) -> Result<Self> {
        hyper.validate()?;
        if !(config.network || config.attributes) {
            return Err(Error::invalid("sampler needs at least one likelihood block"));
        }
        let (kernels, zeta_values) = if config.spatial && config.attributes {
            (
                KernelSet::exponential_grid(data.coords(), &hyper.zeta_grid, hyper.kernel_jitter)?,
                hyper.zeta_grid.clone(),
            )
        } else {
            (KernelSet::identity(data.nodes()), vec![f64::INFINITY])
        };
        Ok(Sampler {
            data,
            hyper,
            config,
            kernels,
            zeta_values,
            plan: SweepPlan::default(),
            warmup: (hyper.burnin / 2).min(LATENT_WARMUP),
        })
    }

    pub fn with_plan(mut self, plan: SweepPlan) -> Self {
        self.plan = plan;
        self
    }

    /// Holds `(π_r, λ_r)` at their initial values for the first `sweeps`
    /// sweeps of [`Sampler::run`]; see [`LATENT_WARMUP`].
    pub fn with_warmup(mut self, sweeps: usize) -> Self {
        self.warmup = sweeps;
        self
    }

    pub fn kernels(&self) -> &KernelSet {
        &self.kernels
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn kernel(&self, state: &ModelState) -> &KernelMatrix {
        self.kernels.get(state.zeta_index)
    }

    /// Starting point: intercepts and auxiliary effects at zero, variances at
    /// the sample variances of the responses, every node active with small
    /// random `ξ_v`, every `λ_r = 1`, `π_r` at its prior mean and `ζ` at the
    /// grid median.
    pub fn initial_state(&self, rng: &mut StreamRng) -> Result<ModelState> {
        let r = self.hyper.rank;
        let q = self.data.aux_count();
        let v_count = self.data.nodes();
        let chol = DMatrix::identity(r + 1, r + 1) * 0.1f64.sqrt();
        let xi = (0..v_count).map(|_| mvn_draw(&DVector::zeros(r + 1), &chol, rng)).collect::<Result<Vec<_>>>()?;
        let pi = (0..r)
            .map(|k| {
                let a = ((k + 1) as f64).powf(self.hyper.dirichlet_exponent);
                let total = a + 2.0;
                let (p1, p2) = (a / total, 1.0 / total);
                [p1, p2, 1.0 - p1 - p2]
            })
            .collect();
        let zeta_index = if self.zeta_values.len() > 1 { self.hyper.median_zeta_index() } else { 0 };
        Ok(ModelState {
            mu_y: 0.0,
            mu_z: 0.0,
            gamma_y: DVector::zeros(q),
            gamma_z: DVector::zeros(q),
            tau_y2: sample_variance(self.data.all_edges()),
            tau_z2: sample_variance(self.data.all_attributes()),
            delta: 0.5,
            l: self.hyper.iw_scale.clone(),
            lambda: vec![1; r],
            pi,
            eta: vec![true; v_count],
            xi,
            zeta_index,
            zeta: self.zeta_values[zeta_index],
        })
    }

    /// One scan over every block in plan order.
    pub fn sweep(&self, state: &mut ModelState, rng: &mut StreamRng) -> Result<()> {
        self.sweep_blocks(state, rng, true)
    }

    fn sweep_blocks(&self, state: &mut ModelState, rng: &mut StreamRng, components: bool) -> Result<()> {
        let net = self.config.network;
        let attr = self.config.attributes;
        for &block in self.plan.blocks() {
            match block {
                Block::Zeta if attr => {
                    let w = zeta_log_weights(self.data, state, &self.kernels)?;
                    state.zeta_index = categorical_draw(&w, rng)?;
                    state.zeta = self.zeta_values[state.zeta_index];
                }
                Block::TauZ2 if attr => {
                    let p = cond_tau_z2(self.data, state, self.hyper, self.kernel(state))?;
                    state.tau_z2 = inv_gamma_draw(p.shape, p.rate, rng)?;
                }
                Block::TauY2 if net => {
                    let p = cond_tau_y2(self.data, state, self.hyper)?;
                    state.tau_y2 = inv_gamma_draw(p.shape, p.rate, rng)?;
                }
                Block::MuY if net => {
                    let p = cond_mu_y(self.data, state, self.hyper)?;
                    state.mu_y = normal_draw(p.mean, p.variance, rng)?;
                }
                Block::MuZ if attr => {
                    let p = cond_mu_z(self.data, state, self.hyper, self.kernel(state))?;
                    state.mu_z = normal_draw(p.mean, p.variance, rng)?;
                }
                Block::GammaY if net && self.data.aux_count() > 0 => {
                    let p = cond_gamma_y(self.data, state, self.hyper)?;
                    state.gamma_y = draw_mvn(&p.mean, &p.cov, rng)?;
                }
                Block::GammaZ if attr && self.data.aux_count() > 0 => {
                    let p = cond_gamma_z(self.data, state, self.hyper, self.kernel(state))?;
                    state.gamma_z = draw_mvn(&p.mean, &p.cov, rng)?;
                }
                Block::L => {
                    let p = cond_l(state, self.hyper);
                    state.l = inv_wishart_draw(p.df, &p.scale, rng)?;
                }
                Block::Delta => {
                    let p = cond_delta(state, self.hyper);
                    let d = beta_draw(p.a, p.b, rng)?;
                    state.delta = d.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                }
                Block::Components if net && components => self.update_components(state, rng)?,
                Block::Nodes => self.update_nodes(state, rng)?,
                _ => {}
            }
        }
        Ok(())
    }

    fn update_components(&self, state: &mut ModelState, rng: &mut StreamRng) -> Result<()> {
        let stats = NetworkStats::new(self.data, state);
        let layers: Vec<DVector<f64>> = (0..state.rank()).map(|k| latent_layer(&state.xi, k)).collect();
        for r in 0..state.rank() {
            let conc = cond_pi_r(r, state, self.hyper);
            let p = dirichlet_draw(&conc, rng)?;
            state.pi[r] = [p[0], p[1], p[2]];
            let w = lambda_log_weights(r, state, &stats, &layers);
            state.lambda[r] = LAMBDA_VALUES[categorical_draw(&w, rng)?];
        }
        Ok(())
    }

    fn update_nodes(&self, state: &mut ModelState, rng: &mut StreamRng) -> Result<()> {
        let prior = SlabPrior::new(&state.l)?;
        let stats = self.config.network.then(|| NetworkStats::new(self.data, state));
        let base = self.config.attributes.then(|| attribute_base(self.data, state));
        let kernel = self.kernel(state);
        for v in 0..self.data.nodes() {
            let rows = base.as_ref().map(|b| attribute_rows(v, self.data, state, kernel, b, self.config.conditioning));
            let post = slab_posterior(
                v,
                self.data,
                state,
                &prior,
                stats.as_ref(),
                rows.as_ref().map(|(r, s)| (r.as_slice(), *s)),
            )?;
            let p = inclusion_probability(state.delta, post.log_bayes_factor);
            let active = bernoulli_draw(p, rng)?;
            state.eta[v] = active;
            state.xi[v] = if active { draw_mvn(&post.mean, &post.cov, rng)? } else { DVector::zeros(state.rank() + 1) };
        }
        Ok(())
    }

    /// Runs `iterations` sweeps from [`Sampler::initial_state`] and keeps the
    /// draws after burn-in.
    pub fn run(&self, rng: &mut StreamRng) -> Result<Chain> {
        let start = Instant::now();
        let mut state = self.initial_state(rng)?;
        let mut states = Vec::with_capacity(self.hyper.kept_draws());
        for t in 0..self.hyper.iterations {
            self.sweep_blocks(&mut state, rng, t >= self.warmup)?;
            if t >= self.hyper.burnin {
                states.push(state.clone());
            }
        }
        Ok(Chain {
            states,
            hyper: self.hyper.clone(),
            config: self.config,
            dataset_fingerprint: self.data.fingerprint(),
            stream: rng.stream(),
            wall_clock: start.elapsed().as_secs_f64(),
        })
    }
}

fn draw_mvn(mean: &DVector<f64>, cov: &DMatrix<f64>, rng: &mut StreamRng) -> Result<DVector<f64>> {
    let chol =
        cov.clone().cholesky().ok_or_else(|| Error::numerical("conditional covariance is not positive definite"))?.l();
    mvn_draw(mean, &chol, rng)
}

fn sample_variance(values: &[DVector<f64>]) -> f64 {
    let count: usize = values.iter().map(|v| v.len()).sum();
    if count < 2 {
        return 1.0;
    }
    let mean = values.iter().map(|v| v.sum()).sum::<f64>() / count as f64;
    let ss: f64 = values.iter().flat_map(|v| v.iter()).map(|x| (x - mean).powi(2)).sum();
    let var = ss / (count - 1) as f64;
    if var.is_finite() && var > 0.0 {
        var
    } else {
        1.0
    }
}

/// Runs one chain with a fresh sampler.
pub fn run_chain(data: &Dataset, hyper: &Hyperparameters, config: SamplerConfig, rng: &mut StreamRng) -> Result<Chain> {
    Sampler::new(data, hyper, config)?.run(rng)
}
