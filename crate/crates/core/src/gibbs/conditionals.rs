//! Closed-form full-conditional parameters, one function per block.
//!
//! Nothing here draws; the sweep pairs each function with a sampler from
//! [`crate::distributions`].

use nalgebra::{DMatrix, DVector};

use crate::distributions::normalize_log_weights;
use crate::error::{Error, Result};
use crate::model::{
    attribute_residuals, latent_layer, network_residuals, Dataset, Hyperparameters, KernelMatrix, KernelSet, ModelState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvGammaParams {
    pub shape: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvWishartParams {
    pub df: f64,
    pub scale: DMatrix<f64>,
}

/// Combines a Gaussian likelihood term `precision · (x − data_mean)²`-style
/// sufficient statistics with the optional `N(0, s²)` coefficient prior.
fn scalar_normal(lik_precision: f64, lik_shift: f64, prior_variance: Option<f64>) -> NormalParams {
    let precision = lik_precision + prior_variance.map_or(0.0, |s2| 1.0 / s2);
    NormalParams { mean: lik_shift / precision, variance: 1.0 / precision }
}

fn vector_normal(mut precision: DMatrix<f64>, shift: DVector<f64>, prior_variance: Option<f64>) -> Result<MvnParams> {
    let q = shift.len();
    if let Some(s2) = prior_variance {
        for k in 0..q {
            precision[(k, k)] += 1.0 / s2;
        }
    }
    let chol = precision.cholesky().ok_or_else(|| {
        Error::invalid("auxiliary Gram matrix Σ w_i w_iᵀ is singular; use more subjects or fewer auxiliary predictors")
    })?;
    let cov = chol.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(MvnParams { mean: chol.solve(&shift), cov })
}

/// `μ_y | −`.
pub fn cond_mu_y(data: &Dataset, state: &ModelState, hyper: &Hyperparameters) -> Result<NormalParams> {
    let resid = network_residuals(data, state)?;
    let h = data.edge_count() as f64;
    let n = data.subjects() as f64;
    let total: f64 = resid.iter().map(|r| r.sum()).sum::<f64>() + n * h * state.mu_y;
    Ok(scalar_normal(n * h / state.tau_y2, total / state.tau_y2, hyper.coefficient_prior_variance))
}

/// `μ_z | −`, generalized least squares through `Σ⁻¹`.
pub fn cond_mu_z(
    data: &Dataset,
    state: &ModelState,
    hyper: &Hyperparameters,
    kernel: &KernelMatrix,
) -> Result<NormalParams> {
    let resid = attribute_residuals(data, state)?;
    let n = data.subjects() as f64;
    let p1 = kernel.precision_ones();
    let opo = kernel.ones_precision_ones();
    let total: f64 = resid.iter().map(|r| p1.dot(r)).sum::<f64>() + n * opo * state.mu_z;
    Ok(scalar_normal(n * opo / state.tau_z2, total / state.tau_z2, hyper.coefficient_prior_variance))
}

/// `γ_y | −`.
pub fn cond_gamma_y(data: &Dataset, state: &ModelState, hyper: &Hyperparameters) -> Result<MvnParams> {
    let resid = network_residuals(data, state)?;
    let h = data.edge_count() as f64;
    let aux = data.aux_effects(state.gamma_y.as_view());
    let sums = DVector::from_iterator(data.subjects(), resid.iter().enumerate().map(|(i, r)| r.sum() + h * aux[i]));
    let w = data.auxiliaries();
    vector_normal(
        data.aux_gram() * (h / state.tau_y2),
        w.transpose() * sums / state.tau_y2,
        hyper.coefficient_prior_variance,
    )
}

/// `γ_z | −`.
pub fn cond_gamma_z(
    data: &Dataset,
    state: &ModelState,
    hyper: &Hyperparameters,
    kernel: &KernelMatrix,
) -> Result<MvnParams> {
    let resid = attribute_residuals(data, state)?;
    let p1 = kernel.precision_ones();
    let opo = kernel.ones_precision_ones();
    let aux = data.aux_effects(state.gamma_z.as_view());
    let sums = DVector::from_iterator(data.subjects(), resid.iter().enumerate().map(|(i, r)| p1.dot(r) + opo * aux[i]));
    let w = data.auxiliaries();
    vector_normal(
        data.aux_gram() * (opo / state.tau_z2),
        w.transpose() * sums / state.tau_z2,
        hyper.coefficient_prior_variance,
    )
}

/// `τ_y² | −`.
pub fn cond_tau_y2(data: &Dataset, state: &ModelState, hyper: &Hyperparameters) -> Result<InvGammaParams> {
    let resid = network_residuals(data, state)?;
    let ss: f64 = resid.iter().map(|r| r.norm_squared()).sum();
    Ok(InvGammaParams {
        shape: hyper.ig_shape + (data.edge_count() * data.subjects()) as f64 / 2.0,
        rate: hyper.ig_rate + ss / 2.0,
    })
}

/// `τ_z² | −`.
pub fn cond_tau_z2(
    data: &Dataset,
    state: &ModelState,
    hyper: &Hyperparameters,
    kernel: &KernelMatrix,
) -> Result<InvGammaParams> {
    let resid = attribute_residuals(data, state)?;
    let ss: f64 = resid.iter().map(|r| kernel.quad_form(r)).sum();
    Ok(InvGammaParams {
        shape: hyper.ig_shape + (data.nodes() * data.subjects()) as f64 / 2.0,
        rate: hyper.ig_rate + ss / 2.0,
    })
}

/// `Δ | −`.
pub fn cond_delta(state: &ModelState, hyper: &Hyperparameters) -> BetaParams {
    let active = state.active_count() as f64;
    BetaParams { a: hyper.delta_a + active, b: hyper.delta_b + state.nodes() as f64 - active }
}

/// `L | −`.
pub fn cond_l(state: &ModelState, hyper: &Hyperparameters) -> InvWishartParams {
    let mut scale = hyper.iw_scale.clone();
    for (x, _) in state.xi.iter().zip(&state.eta).filter(|(_, &e)| e) {
        scale += x * x.transpose();
    }
    InvWishartParams { df: hyper.iw_df + state.active_count() as f64, scale }
}

/// Dirichlet concentration of `π_r | −` for the 0-based component `r`,
/// ordered as `λ_r = 0, 1, −1`.
pub fn cond_pi_r(r: usize, state: &ModelState, hyper: &Hyperparameters) -> [f64; 3] {
    let base = ((r + 1) as f64).powf(hyper.dirichlet_exponent);
    let l = state.lambda[r];
    [base + f64::from(u8::from(l == 0)), 1.0 + f64::from(u8::from(l == 1)), 1.0 + f64::from(u8::from(l == -1))]
}

/// Network sufficient statistics that do not depend on `λ` or `ξ`:
/// `s(e) = Σ_i x_i (y_i(e) − μ_y − w_iᵀγ_y)` and `Σ_i x_i²`.
#[derive(Debug, Clone)]
pub struct NetworkStats {
    pub cross: DVector<f64>,
    pub sxx: f64,
}

impl NetworkStats {
    pub fn new(data: &Dataset, state: &ModelState) -> Self {
        let aux = data.aux_effects(state.gamma_y.as_view());
        let x = data.predictor();
        let mut cross = DVector::zeros(data.edge_count());
        for i in 0..data.subjects() {
            let shift = state.mu_y + aux[i];
            for (c, y) in cross.iter_mut().zip(data.edges(i).iter()) {
                *c += x[i] * (y - shift);
            }
        }
        NetworkStats { cross, sxx: x.norm_squared() }
    }
}

/// Unnormalized log-weights of `λ_r ∈ {0, 1, −1}`, given the rank-1 layers
/// of every component.
pub fn lambda_log_weights(r: usize, state: &ModelState, stats: &NetworkStats, layers: &[DVector<f64>]) -> [f64; 3] {
    let layer = &layers[r];
    let mut others = DVector::zeros(layer.len());
    for (k, lk) in layers.iter().enumerate() {
        if k != r && state.lambda[k] != 0 {
            others.axpy(state.lambda[k] as f64, lk, 1.0);
        }
    }
    // Σ_i x_i ỹ_i with every component but r removed.
    let cross = &stats.cross - others * stats.sxx;
    let lin = layer.dot(&cross);
    let quad = stats.sxx * layer.norm_squared();
    let mut out = [0.0; 3];
    for (k, c) in [0.0, 1.0, -1.0].into_iter().enumerate() {
        let loglik = -(-2.0 * c * lin + c * c * quad) / (2.0 * state.tau_y2);
        out[k] = state.pi[r][k].ln() + loglik;
    }
    out
}

/// Probabilities of `λ_r = 0, 1, −1` given everything else.
pub fn cond_lambda_r(r: usize, data: &Dataset, state: &ModelState) -> Result<[f64; 3]> {
    if r >= state.rank() {
        return Err(Error::invalid(format!("component {r} out of range")));
    }
    let stats = NetworkStats::new(data, state);
    let layers: Vec<_> = (0..state.rank()).map(|k| latent_layer(&state.xi, k)).collect();
    let p = normalize_log_weights(&lambda_log_weights(r, state, &stats, &layers))?;
    Ok([p[0], p[1], p[2]])
}

/// Unnormalized log-probabilities of each ζ grid point.
pub fn zeta_log_weights(data: &Dataset, state: &ModelState, kernels: &KernelSet) -> Result<Vec<f64>> {
    let resid = attribute_residuals(data, state)?;
    let n = data.subjects() as f64;
    Ok(kernels
        .iter()
        .map(|k| {
            let quad: f64 = resid.iter().map(|r| k.quad_form(r)).sum();
            -0.5 * n * k.logdet() - quad / (2.0 * state.tau_z2)
        })
        .collect())
}

/// `P(ζ = ζ_l | −)` over the grid.
pub fn cond_zeta(data: &Dataset, state: &ModelState, kernels: &KernelSet) -> Result<Vec<f64>> {
    normalize_log_weights(&zeta_log_weights(data, state, kernels)?)
}
