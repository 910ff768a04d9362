//! Joint `(η_v, ξ_v)` update.
//!
//! For node `v` the responses that depend on `ξ_v = (α(v), θ(v))` are one
//! attribute value and the `V − 1` incident edges per subject. Stacking them
//! as `f = A ξ_v + e`, `e ~ N(0, D)` with `D` diagonal, the slab posterior
//! has precision `M = L⁻¹ + AᵀD⁻¹A` and shift `b = AᵀD⁻¹f`, and the log
//! Bayes factor of slab against spike is
//! `−½(log|L| + log|M|) + ½ bᵀM⁻¹b`.
//! Both are assembled from sufficient statistics, so the `nV`-dimensional
//! covariance is never formed.

use nalgebra::{DMatrix, DVector};

use super::conditionals::NetworkStats;
use crate::distributions::logistic;
use crate::error::{Error, Result};
use crate::model::{unordered_pair_index, AttributeConditioning, Dataset, KernelMatrix, ModelState, SamplerConfig};

/// `L⁻¹` and `log|L|`, fixed across one pass over the nodes.
#[derive(Debug, Clone)]
pub struct SlabPrior {
    inverse: DMatrix<f64>,
    logdet: f64,
}

impl SlabPrior {
    pub fn new(l: &DMatrix<f64>) -> Result<Self> {
        let chol =
            l.clone().cholesky().ok_or_else(|| Error::numerical("slab covariance L is not positive definite"))?;
        let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let inverse = chol.inverse();
        Ok(SlabPrior { inverse: (&inverse + inverse.transpose()) * 0.5, logdet })
    }
}

#[derive(Debug, Clone)]
pub struct SlabPosterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    /// `log N(f | 0, ALAᵀ + D) − log N(f | 0, D)`.
    pub log_bayes_factor: f64,
}

/// `z_i − 1μ_z − 1w_iᵀγ_z` for every subject: attribute residuals with the
/// node effects left in.
pub fn attribute_base(data: &Dataset, state: &ModelState) -> Vec<DVector<f64>> {
    let aux = data.aux_effects(state.gamma_z.as_view());
    (0..data.subjects()).map(|i| data.attributes(i).map(|z| z - state.mu_z - aux[i])).collect()
}

/// Attribute row of subject `i` for node `v`: response and noise variance.
///
/// Whitened rows condition on the other nodes' spatial effects
/// `δ_i(u) = base_i(u) − α(u) x_i`, giving the kriging residual with
/// variance `τ_z² / P_vv`, `P = Σ⁻¹`.
pub fn attribute_rows(
    v: usize,
    data: &Dataset,
    state: &ModelState,
    kernel: &KernelMatrix,
    base: &[DVector<f64>],
    conditioning: AttributeConditioning,
) -> (Vec<f64>, f64) {
    match conditioning {
        AttributeConditioning::Verbatim => (base.iter().map(|b| b[v]).collect(), state.tau_z2),
        AttributeConditioning::Whitened => {
            let p = kernel.precision();
            let prow = p.row(v);
            let pvv = p[(v, v)];
            let alpha = state.alpha_vector();
            let p_alpha = prow.dot(&alpha.transpose());
            let x = data.predictor();
            let rows = base
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let own = pvv * (b[v] - alpha[v] * x[i]);
                    let others = prow.dot(&b.transpose()) - x[i] * p_alpha - own;
                    b[v] + others / pvv
                })
                .collect();
            (rows, state.tau_z2 / pvv)
        }
    }
}

/// Slab posterior for node `v` from precomputed statistics.
///
/// `net` is `None` when the network likelihood is switched off, `attr` is
/// `None` when the attribute likelihood is.
pub fn slab_posterior(
    v: usize,
    data: &Dataset,
    state: &ModelState,
    prior: &SlabPrior,
    net: Option<&NetworkStats>,
    attr: Option<(&[f64], f64)>,
) -> Result<SlabPosterior> {
    let d = state.rank() + 1;
    let v_count = data.nodes();
    let mut precision = prior.inverse.clone();
    let mut shift = DVector::zeros(d);

    if let Some((rows, variance)) = attr {
        let x = data.predictor();
        precision[(0, 0)] += x.norm_squared() / variance;
        shift[0] += x.iter().zip(rows).map(|(xi, f)| xi * f).sum::<f64>() / variance;
    }

    if let Some(stats) = net {
        let r = state.rank();
        let mut gram = DMatrix::<f64>::zeros(r, r);
        let mut cross = DVector::<f64>::zeros(r);
        for u in (0..v_count).filter(|&u| u != v) {
            let g = DVector::from_iterator(r, (0..r).map(|k| state.lambda[k] as f64 * state.xi[u][k + 1]));
            gram.ger(1.0, &g, &g, 1.0);
            cross.axpy(stats.cross[unordered_pair_index(v_count, u, v)], &g, 1.0);
        }
        let mut block = precision.view_mut((1, 1), (r, r));
        block += gram * (stats.sxx / state.tau_y2);
        let mut tail = shift.rows_mut(1, r);
        tail += cross / state.tau_y2;
    }

    let precision = (&precision + precision.transpose()) * 0.5;
    let chol = precision.cholesky().ok_or_else(|| {
        Error::numerical(format!("slab posterior precision for node {} is not positive definite", v + 1))
    })?;
    let logdet_m = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let mean = chol.solve(&shift);
    let cov = chol.inverse();
    let cov = (&cov + cov.transpose()) * 0.5;
    let log_bayes_factor = -0.5 * (prior.logdet + logdet_m) + 0.5 * shift.dot(&mean);
    if !log_bayes_factor.is_finite() {
        return Err(Error::numerical(format!("non-finite Bayes factor at node {}", v + 1)));
    }
    Ok(SlabPosterior { mean, cov, log_bayes_factor })
}

/// Slab parameters of `ξ_v | η_v = 1, −` and the slab-versus-spike Bayes
/// factor, computed from scratch.
pub fn cond_xi_v(
    v: usize,
    data: &Dataset,
    state: &ModelState,
    kernel: &KernelMatrix,
    config: &SamplerConfig,
) -> Result<SlabPosterior> {
    if v >= data.nodes() {
        return Err(Error::invalid(format!("node index {v} out of range")));
    }
    let prior = SlabPrior::new(&state.l)?;
    let stats = config.network.then(|| NetworkStats::new(data, state));
    let base = config.attributes.then(|| attribute_base(data, state));
    let rows = base.as_ref().map(|b| attribute_rows(v, data, state, kernel, b, config.conditioning));
    slab_posterior(v, data, state, &prior, stats.as_ref(), rows.as_ref().map(|(r, s)| (r.as_slice(), *s)))
}

/// `P(η_v = 1 | −)` with `ξ_v` integrated out.
pub fn cond_eta_v(
    v: usize,
    data: &Dataset,
    state: &ModelState,
    kernel: &KernelMatrix,
    config: &SamplerConfig,
) -> Result<f64> {
    let post = cond_xi_v(v, data, state, kernel, config)?;
    Ok(inclusion_probability(state.delta, post.log_bayes_factor))
}

pub fn inclusion_probability(delta: f64, log_bayes_factor: f64) -> f64 {
    logistic(delta.ln() - (1.0 - delta).ln() + log_bayes_factor)
}
