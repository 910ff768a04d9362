//! Synthetic data from the joint model at known parameter values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{bernoulli_draw, inv_wishart_draw, mvn_draw, standard_normal, StreamRng};
use crate::error::{Error, Result};
use crate::model::{beta_from_latent, beta_vector, hyper::DEFAULT_JITTER, Dataset, KernelMatrix, ModelState, Point3};

/// Generating parameters of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// 1-based scenario number; 0 for custom configurations.
    pub id: usize,
    /// True proportion of uninfluential nodes, `1 − Δ*`.
    pub sparsity: f64,
    pub zeta_star: f64,
    pub subjects: usize,
    pub nodes: usize,
    pub rank_star: usize,
    pub tau_y2_star: f64,
    pub tau_z2_star: f64,
    pub gamma_y_star: Vec<f64>,
    pub gamma_z_star: Vec<f64>,
    pub mu_y_star: f64,
    pub mu_z_star: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn delta_star(&self) -> f64 {
        1.0 - self.sparsity
    }

    pub fn aux_count(&self) -> usize {
        self.gamma_y_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        let positives = [self.zeta_star, self.tau_y2_star, self.tau_z2_star];
        if positives.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::invalid("scenario ζ*, τ_y²* and τ_z²* must be positive"));
        }
        if !(self.sparsity > 0.0 && self.sparsity < 1.0) {
            return Err(Error::invalid(format!("sparsity {} outside (0, 1)", self.sparsity)));
        }
        if self.subjects == 0 || self.nodes < 2 || self.rank_star == 0 {
            return Err(Error::invalid("scenario needs n ≥ 1, V ≥ 2 and R* ≥ 1"));
        }
        if self.gamma_y_star.len() != self.gamma_z_star.len() {
            return Err(Error::invalid("γ_y* and γ_z* must have the same length"));
        }
        let all = self.gamma_y_star.iter().chain(&self.gamma_z_star).chain([&self.mu_y_star, &self.mu_z_star]);
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("scenario coefficients must be finite"));
        }
        Ok(())
    }
}

const TABLE: [(f64, f64); 7] = [(0.8, 0.05), (0.7, 0.1), (0.7, 0.2), (0.5, 0.1), (0.5, 0.2), (0.4, 0.05), (0.3, 0.05)];

/// The seven built-in scenarios: `(1 − Δ*, ζ*)` pairs with `R* = 4`,
/// `τ_y²* = 1`, `τ_z²* = 9`, `γ_y* = (0.2, 0.5)`, `γ_z* = (0.1, 0.4)`,
/// zero intercepts, `V = 20` and `n = 100`.
pub fn builtin_scenarios() -> Vec<ScenarioConfig> {
    TABLE
        .iter()
        .enumerate()
        .map(|(k, &(sparsity, zeta_star))| ScenarioConfig {
            id: k + 1,
            sparsity,
            zeta_star,
            subjects: 100,
            nodes: 20,
            rank_star: 4,
            tau_y2_star: 1.0,
            tau_z2_star: 9.0,
            gamma_y_star: vec![0.2, 0.5],
            gamma_z_star: vec![0.1, 0.4],
            mu_y_star: 0.0,
            mu_z_star: 0.0,
            seed: 0,
        })
        .collect()
}

/// Built-in scenario by 1-based number.
pub fn scenario(id: usize) -> Result<ScenarioConfig> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::invalid(format!("unknown scenario {id}; expected 1–{}", TABLE.len())))
}

/// True node-level parameters, coordinates and per-subject spatial effects.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub eta_star: Vec<bool>,
    /// `(α*(v), θ*(v))` per node.
    pub xi_star: Vec<DVector<f64>>,
    pub l_star: DMatrix<f64>,
    pub beta_star: DMatrix<f64>,
    pub coords: Vec<Point3>,
    /// `δ*_i` per subject.
    pub spatial_effects: Vec<DVector<f64>>,
    pub config: ScenarioConfig,
}

impl GroundTruth {
    pub fn alpha_star(&self) -> DVector<f64> {
        DVector::from_iterator(self.xi_star.len(), self.xi_star.iter().map(|x| x[0]))
    }

    /// The generating parameters as a [`ModelState`] with every `λ_r = 1`.
    pub fn state(&self) -> ModelState {
        let c = &self.config;
        ModelState {
            mu_y: c.mu_y_star,
            mu_z: c.mu_z_star,
            gamma_y: DVector::from_vec(c.gamma_y_star.clone()),
            gamma_z: DVector::from_vec(c.gamma_z_star.clone()),
            tau_y2: c.tau_y2_star,
            tau_z2: c.tau_z2_star,
            delta: c.delta_star(),
            l: self.l_star.clone(),
            lambda: vec![1; c.rank_star],
            pi: vec![[0.0, 1.0, 0.0]; c.rank_star],
            eta: self.eta_star.clone(),
            xi: self.xi_star.clone(),
            zeta_index: 0,
            zeta: c.zeta_star,
        }
    }

    pub fn kernel(&self) -> Result<KernelMatrix> {
        KernelMatrix::exponential(&self.coords, self.config.zeta_star, DEFAULT_JITTER)
    }
}

const MAX_ETA_ATTEMPTS: usize = 100;

/// Draws node indicators, slab covariance, latent vectors, coordinates and
/// spatial effects for `cfg.subjects` subjects.
pub fn generate_truth(cfg: &ScenarioConfig, rng: &mut StreamRng) -> Result<GroundTruth> {
    cfg.validate()?;
    let v_count = cfg.nodes;
    let d = cfg.rank_star + 1;
    let mut eta_star = Vec::new();
    for attempt in 0.. {
        if attempt == MAX_ETA_ATTEMPTS {
            return Err(Error::invalid(format!(
                "no active node in {MAX_ETA_ATTEMPTS} draws at Δ* = {}",
                cfg.delta_star()
            )));
        }
        eta_star = (0..v_count).map(|_| bernoulli_draw(cfg.delta_star(), rng)).collect::<Result<Vec<_>>>()?;
        if eta_star.iter().any(|&e| e) {
            break;
        }
    }
    let l_star = inv_wishart_draw(cfg.rank_star as f64 + 2.0, &DMatrix::identity(d, d), rng)?;
    let l_chol = l_star.clone().cholesky().ok_or_else(|| Error::numerical("L* is not positive definite"))?.l();
    let xi_star = eta_star
        .iter()
        .map(|&e| if e { mvn_draw(&DVector::zeros(d), &l_chol, rng) } else { Ok(DVector::zeros(d)) })
        .collect::<Result<Vec<_>>>()?;
    let coords: Vec<Point3> =
        (0..v_count).map(|_| [standard_normal(rng), standard_normal(rng), standard_normal(rng)]).collect();
    let beta_star = beta_from_latent(&vec![1; cfg.rank_star], &xi_star)?;
    let kernel = KernelMatrix::exponential(&coords, cfg.zeta_star, DEFAULT_JITTER)?;
    let spatial_effects = draw_spatial_effects(cfg.subjects, cfg.tau_z2_star, &kernel, rng)?;
    Ok(GroundTruth { eta_star, xi_star, l_star, beta_star, coords, spatial_effects, config: cfg.clone() })
}

/// Per-subject edge vectors and attribute vectors.
pub type Responses = (Vec<DVector<f64>>, Vec<DVector<f64>>);

/// `count` independent draws from `N(0, τ² Σ)`.
pub fn draw_spatial_effects(
    count: usize,
    tau2: f64,
    kernel: &KernelMatrix,
    rng: &mut StreamRng,
) -> Result<Vec<DVector<f64>>> {
    let chol = kernel.cholesky_factor() * tau2.sqrt();
    let zero = DVector::zeros(kernel.dim());
    (0..count).map(|_| mvn_draw(&zero, &chol, rng)).collect()
}

/// Responses of every subject under `state`, given predictors and the
/// spatial effects: edges get fresh `N(0, τ_y²)` noise.
pub fn draw_responses(
    predictor: &DVector<f64>,
    auxiliaries: &DMatrix<f64>,
    state: &ModelState,
    spatial_effects: &[DVector<f64>],
    rng: &mut StreamRng,
) -> Result<Responses> {
    let beta = beta_vector(&state.lambda, &state.xi)?;
    let alpha = state.alpha_vector();
    let sd = state.tau_y2.sqrt();
    let n = predictor.len();
    let (aux_y, aux_z) = if auxiliaries.ncols() == 0 {
        (DVector::zeros(n), DVector::zeros(n))
    } else {
        (auxiliaries * &state.gamma_y, auxiliaries * &state.gamma_z)
    };
    let mut edges = Vec::with_capacity(n);
    let mut attrs = Vec::with_capacity(n);
    for i in 0..n {
        let x = predictor[i];
        let shift = state.mu_y + aux_y[i];
        edges.push(beta.map(|b| shift + b * x + sd * standard_normal(rng)));
        let zshift = state.mu_z + aux_z[i];
        attrs.push(DVector::from_fn(alpha.len(), |v, _| zshift + alpha[v] * x + spatial_effects[i][v]));
    }
    Ok((edges, attrs))
}

fn draw_predictors(n: usize, q: usize, rng: &mut StreamRng) -> (DVector<f64>, DMatrix<f64>) {
    let x = DVector::from_fn(n, |_, _| standard_normal(rng));
    let w = DMatrix::from_fn(n, q, |_, _| standard_normal(rng));
    (x, w)
}

/// Simulated dataset for the subjects whose spatial effects `truth` holds.
pub fn generate_dataset(cfg: &ScenarioConfig, truth: &GroundTruth, rng: &mut StreamRng) -> Result<Dataset> {
    cfg.validate()?;
    let n = truth.spatial_effects.len();
    let (x, w) = draw_predictors(n, cfg.aux_count(), rng);
    let (edges, attrs) = draw_responses(&x, &w, &truth.state(), &truth.spatial_effects, rng)?;
    Dataset::from_edges(cfg.nodes, edges, attrs, x, w, truth.coords.clone())
}

/// `count` new subjects from the same truth, with fresh predictors, spatial
/// effects and noise.
pub fn generate_holdout(truth: &GroundTruth, count: usize, rng: &mut StreamRng) -> Result<Dataset> {
    let cfg = &truth.config;
    let (x, w) = draw_predictors(count, cfg.aux_count(), rng);
    let effects = draw_spatial_effects(count, cfg.tau_z2_star, &truth.kernel()?, rng)?;
    let (edges, attrs) = draw_responses(&x, &w, &truth.state(), &effects, rng)?;
    Dataset::from_edges(cfg.nodes, edges, attrs, x, w, truth.coords.clone())
}
