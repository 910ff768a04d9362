//! Posterior summaries of a stored chain.
//!
//! Quantiles follow the linear-interpolation rule on order statistics
//! (`h = (N − 1)p`, interpolate between `x_⌊h⌋` and `x_⌈h⌉`), so a level
//! `0.95` interval over the draws `1, …, 100` is `[3.475, 97.525]`.

mod curve;
mod predict;

pub use curve::{spatial_correlation_curve, CurveBin, CurvePooling, SpatialCurve};
pub use predict::{posterior_predict, PredictiveSummary};

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{beta_vector, devectorize_upper, Chain};

/// Default median-probability selection threshold.
pub const SELECTION_THRESHOLD: f64 = 0.5;

/// Empirical quantile of sorted data, linear interpolation between order
/// statistics.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    /// Posterior mean and equal-tailed interval at `level`.
    pub fn from_draws(draws: &[f64], level: f64) -> Self {
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        let tail = (1.0 - level) / 2.0;
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        Interval {
            // Guard against the mean drifting outside a zero-width interval
            // by a rounding error.
            mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
            lower: quantile_sorted(&sorted, tail),
            upper: quantile_sorted(&sorted, 1.0 - tail),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `P(η_v = 1 | data)` estimated by the share of draws with `η_v = 1`.
pub fn inclusion_probabilities(chain: &Chain) -> Vec<f64> {
    let f = chain.len() as f64;
    (0..chain.nodes()).map(|v| chain.states.iter().filter(|s| s.eta[v]).count() as f64 / f).collect()
}

/// Nodes selected by the strict rule `P(η_v = 1 | data) > threshold`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub selected: Vec<usize>,
    /// Nodes exactly at the threshold; never selected.
    pub ties: Vec<usize>,
}

pub fn select_nodes(probabilities: &[f64], threshold: f64) -> Selection {
    Selection {
        selected: (0..probabilities.len()).filter(|&v| probabilities[v] > threshold).collect(),
        ties: (0..probabilities.len()).filter(|&v| probabilities[v] == threshold).collect(),
    }
}

/// Intervals for every node pair `u < v`, in upper-triangular order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeIntervals {
    pub nodes: usize,
    pub entries: Vec<Interval>,
}

impl EdgeIntervals {
    fn matrix_of(&self, pick: impl Fn(&Interval) -> f64) -> DMatrix<f64> {
        let vec = DVector::from_iterator(self.entries.len(), self.entries.iter().map(pick));
        devectorize_upper(&vec, self.nodes).expect("entry count matches node count")
    }

    /// Posterior mean matrix, symmetric with zero diagonal.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        self.matrix_of(|i| i.mean)
    }

    pub fn lower_matrix(&self) -> DMatrix<f64> {
        self.matrix_of(|i| i.lower)
    }

    pub fn upper_matrix(&self) -> DMatrix<f64> {
        self.matrix_of(|i| i.upper)
    }
}

/// Node selection plus point and interval estimates of every coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub level: f64,
    pub draws: usize,
    pub inclusion_prob: Vec<f64>,
    pub selection: Selection,
    pub beta: EdgeIntervals,
    pub alpha: Vec<Interval>,
    /// `mu_y`, `mu_z`, `gamma_y[k]`, `gamma_z[k]`, `tau_y2`, `tau_z2`,
    /// `delta` and, for spatial fits, `zeta`.
    pub scalars: BTreeMap<String, Interval>,
}

/// Per-entry posterior means and equal-tailed intervals at `level`.
pub fn coefficient_summary(chain: &Chain, level: f64) -> Result<PosteriorSummary> {
    if chain.is_empty() {
        return Err(Error::invalid("cannot summarize an empty chain"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level {level} outside (0, 1)")));
    }
    let v_count = chain.nodes();
    let betas = chain.states.iter().map(|s| beta_vector(&s.lambda, &s.xi)).collect::<Result<Vec<_>>>()?;
    let h = betas[0].len();
    let mut column = vec![0.0; chain.len()];
    let entries = (0..h)
        .map(|e| {
            for (c, b) in column.iter_mut().zip(&betas) {
                *c = b[e];
            }
            Interval::from_draws(&column, level)
        })
        .collect();
    let alpha = (0..v_count).map(|v| Interval::from_draws(&chain.trace(|s| s.alpha(v)), level)).collect();

    let mut scalars = BTreeMap::new();
    let mut put = |name: String, f: &dyn Fn(&crate::model::ModelState) -> f64| {
        scalars.insert(name, Interval::from_draws(&chain.trace(f), level));
    };
    put("mu_y".into(), &|s| s.mu_y);
    put("mu_z".into(), &|s| s.mu_z);
    put("tau_y2".into(), &|s| s.tau_y2);
    put("tau_z2".into(), &|s| s.tau_z2);
    put("delta".into(), &|s| s.delta);
    for k in 0..chain.states[0].gamma_y.len() {
        put(format!("gamma_y[{}]", k + 1), &|s| s.gamma_y[k]);
        put(format!("gamma_z[{}]", k + 1), &|s| s.gamma_z[k]);
    }
    if chain.states.iter().all(|s| s.zeta.is_finite()) {
        put("zeta".into(), &|s| s.zeta);
    }

    let inclusion_prob = inclusion_probabilities(chain);
    Ok(PosteriorSummary {
        level,
        draws: chain.len(),
        selection: select_nodes(&inclusion_prob, SELECTION_THRESHOLD),
        inclusion_prob,
        beta: EdgeIntervals { nodes: v_count, entries },
        alpha,
        scalars,
    })
}

/// Posterior mean of `x Δ L₁₂ᵀ`: the covariance between the attribute effect
/// and each latent network coordinate induced at predictor value `x`.
pub fn implied_cross_covariance(chain: &Chain, x: f64) -> Result<DVector<f64>> {
    if chain.is_empty() {
        return Err(Error::invalid("cannot summarize an empty chain"));
    }
    let r = chain.hyper.rank;
    let mut acc = DVector::zeros(r);
    for s in &chain.states {
        let l12 = s.l.view((0, 1), (1, r)).transpose();
        acc += l12 * (x * s.delta);
    }
    Ok(acc / chain.len() as f64)
}
