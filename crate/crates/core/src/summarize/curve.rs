use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::{mvn_draw, StreamRng};
use crate::error::{Error, Result};
use crate::model::{distance, pairs, Chain, Dataset, KernelMatrix, ModelState};

/// Order of averaging when turning predictive fields into pair correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvePooling {
    /// Correlate across draws within each subject, then average subjects.
    #[default]
    PerSubject,
    /// Center each subject's draws, then correlate over all subjects and
    /// draws at once.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBin {
    pub lower: f64,
    pub upper: f64,
    pub midpoint: f64,
    pub pairs: usize,
    pub correlation: f64,
    /// Mean of `exp(−ζ* d)` over the bin's pairs, when `ζ*` is known.
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialCurve {
    pub pooling: CurvePooling,
    pub bins: Vec<CurveBin>,
    /// Bins with fewer than two pairs, as `(lower, upper, pairs)`.
    pub dropped: Vec<(f64, f64, usize)>,
}

/// Lower Cholesky factor of `Σ(ζ)` per distinct `ζ` in the chain.
pub(crate) fn kernel_factors(chain: &Chain, data: &Dataset) -> Result<BTreeMap<u64, DMatrix<f64>>> {
    let mut out = BTreeMap::new();
    for s in &chain.states {
        let key = s.zeta.to_bits();
        if let Entry::Vacant(slot) = out.entry(key) {
            let k = if s.zeta.is_finite() {
                KernelMatrix::exponential(data.coords(), s.zeta, chain.hyper.kernel_jitter)?
            } else {
                KernelMatrix::identity(data.nodes())
            };
            slot.insert(k.cholesky_factor());
        }
    }
    Ok(out)
}

/// Predictive attribute field `μ_z + α̃x + w_iᵀγ_z + δ`, `δ ~ N(0, τ_z²Σ)`.
pub(crate) fn predictive_field(
    state: &ModelState,
    x: f64,
    aux_effect: f64,
    chol: &DMatrix<f64>,
    rng: &mut StreamRng,
) -> Result<nalgebra::DVector<f64>> {
    let mean = state.alpha_vector() * x + nalgebra::DVector::from_element(state.nodes(), state.mu_z + aux_effect);
    mvn_draw(&mean, &(chol * state.tau_z2.sqrt()), rng)
}

fn correlation(sxy: f64, sxx: f64, syy: f64) -> f64 {
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Empirical correlation of posterior predictive attribute fields as a
/// function of inter-node distance, over `bins` equal-width bins on
/// `[0, max distance]`.
pub fn spatial_correlation_curve(
    chain: &Chain,
    data: &Dataset,
    bins: usize,
    pooling: CurvePooling,
    zeta_star: Option<f64>,
    rng: &mut StreamRng,
) -> Result<SpatialCurve> {
    if chain.len() < 2 {
        return Err(Error::invalid("spatial correlation needs at least two draws"));
    }
    if bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    if chain.nodes() != data.nodes() {
        return Err(Error::invalid("chain and dataset have different node counts"));
    }
    let v_count = data.nodes();
    let n = data.subjects();
    let f = chain.len();
    let factors = kernel_factors(chain, data)?;
    let x = data.predictor();
    let pair_list: Vec<(usize, usize)> = pairs(v_count).collect();

    // Per pair: summed correlations, or summed centered cross-products.
    let mut corr_sum = vec![0.0; pair_list.len()];
    let mut pooled = vec![0.0; pair_list.len()];
    let mut var_pooled = vec![0.0; v_count];
    let mut fields = DMatrix::zeros(f, v_count);
    for i in 0..n {
        for (t, s) in chain.states.iter().enumerate() {
            let aux = if data.aux_count() > 0 { data.auxiliaries().row(i).dot(&s.gamma_z.transpose()) } else { 0.0 };
            let z = predictive_field(s, x[i], aux, &factors[&s.zeta.to_bits()], rng)?;
            fields.row_mut(t).copy_from(&z.transpose());
        }
        let means = fields.row_mean();
        for t in 0..f {
            for v in 0..v_count {
                fields[(t, v)] -= means[v];
            }
        }
        let cov = fields.transpose() * &fields;
        for (k, &(u, v)) in pair_list.iter().enumerate() {
            match pooling {
                CurvePooling::PerSubject => {
                    corr_sum[k] += correlation(cov[(u, v)], cov[(u, u)], cov[(v, v)]);
                }
                CurvePooling::Pooled => pooled[k] += cov[(u, v)],
            }
        }
        for v in 0..v_count {
            var_pooled[v] += cov[(v, v)];
        }
    }
    let pair_corr: Vec<f64> = pair_list
        .iter()
        .enumerate()
        .map(|(k, &(u, v))| match pooling {
            CurvePooling::PerSubject => corr_sum[k] / n as f64,
            CurvePooling::Pooled => correlation(pooled[k], var_pooled[u], var_pooled[v]),
        })
        .collect();

    let dists: Vec<f64> = pair_list.iter().map(|&(u, v)| distance(&data.coords()[u], &data.coords()[v])).collect();
    let max_d = dists.iter().copied().fold(0.0, f64::max);
    let width = max_d / bins as f64;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); bins];
    for (k, &d) in dists.iter().enumerate() {
        let b = ((d / width) as usize).min(bins - 1);
        members[b].push(k);
    }
    let mut out = Vec::new();
    let mut dropped = Vec::new();
    for (b, m) in members.iter().enumerate() {
        let (lower, upper) = (b as f64 * width, (b + 1) as f64 * width);
        if m.len() < 2 {
            dropped.push((lower, upper, m.len()));
            continue;
        }
        let correlation = m.iter().map(|&k| pair_corr[k]).sum::<f64>() / m.len() as f64;
        let reference = zeta_star.map(|z| m.iter().map(|&k| (-z * dists[k]).exp()).sum::<f64>() / m.len() as f64);
        out.push(CurveBin { lower, upper, midpoint: (lower + upper) / 2.0, pairs: m.len(), correlation, reference });
    }
    Ok(SpatialCurve { pooling, bins: out, dropped })
}
