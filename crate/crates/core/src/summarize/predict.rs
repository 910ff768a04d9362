use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::curve::{kernel_factors, predictive_field};
use super::Interval;
use crate::distributions::{standard_normal, StreamRng};
use crate::error::{Error, Result};
use crate::model::{beta_vector, Chain, Dataset};

/// Predictive means and intervals for new subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveSummary {
    pub level: f64,
    /// Per subject, one interval per edge in upper-triangular order.
    pub edges: Vec<Vec<Interval>>,
    /// Per subject, one interval per node.
    pub attributes: Vec<Vec<Interval>>,
}

impl PredictiveSummary {
    /// Mean squared error of the predictive means against observed edges.
    pub fn edge_mspe(&self, observed: &Dataset) -> f64 {
        mspe(&self.edges, observed.all_edges())
    }

    pub fn attribute_mspe(&self, observed: &Dataset) -> f64 {
        mspe(&self.attributes, observed.all_attributes())
    }

    /// Share of observed edges inside their prediction intervals.
    pub fn edge_coverage(&self, observed: &Dataset) -> f64 {
        coverage(&self.edges, observed.all_edges())
    }

    pub fn attribute_coverage(&self, observed: &Dataset) -> f64 {
        coverage(&self.attributes, observed.all_attributes())
    }

    pub fn edge_interval_length(&self) -> f64 {
        mean_width(&self.edges)
    }

    pub fn attribute_interval_length(&self) -> f64 {
        mean_width(&self.attributes)
    }
}

fn mspe(pred: &[Vec<Interval>], obs: &[DVector<f64>]) -> f64 {
    let (mut ss, mut count) = (0.0, 0usize);
    for (p, o) in pred.iter().zip(obs) {
        for (i, y) in p.iter().zip(o.iter()) {
            ss += (i.mean - y).powi(2);
            count += 1;
        }
    }
    ss / count as f64
}

fn coverage(pred: &[Vec<Interval>], obs: &[DVector<f64>]) -> f64 {
    let (mut hit, mut count) = (0usize, 0usize);
    for (p, o) in pred.iter().zip(obs) {
        for (i, y) in p.iter().zip(o.iter()) {
            hit += usize::from(i.contains(*y));
            count += 1;
        }
    }
    hit as f64 / count as f64
}

fn mean_width(pred: &[Vec<Interval>]) -> f64 {
    let all: Vec<f64> = pred.iter().flatten().map(Interval::width).collect();
    all.iter().sum::<f64>() / all.len() as f64
}

/// Simulates edges and attributes of new subjects with predictors `new_x`
/// and auxiliaries `new_w` once per stored draw, noise and spatial effect
/// included, and summarizes them at `level`.
///
/// `data` supplies the node coordinates.
pub fn posterior_predict(
    chain: &Chain,
    data: &Dataset,
    new_x: &DVector<f64>,
    new_w: &DMatrix<f64>,
    level: f64,
    rng: &mut StreamRng,
) -> Result<PredictiveSummary> {
    if chain.is_empty() {
        return Err(Error::invalid("cannot predict from an empty chain"));
    }
    let q = chain.states[0].gamma_y.len();
    if new_w.nrows() != new_x.len() || new_w.ncols() != q {
        return Err(Error::invalid(format!(
            "new auxiliaries must be {}x{q}, got {}x{}",
            new_x.len(),
            new_w.nrows(),
            new_w.ncols()
        )));
    }
    let factors = kernel_factors(chain, data)?;
    let betas = chain.states.iter().map(|s| beta_vector(&s.lambda, &s.xi)).collect::<Result<Vec<_>>>()?;
    let h = betas[0].len();
    let v_count = data.nodes();
    let f = chain.len();
    let mut edge_draws = DMatrix::zeros(h, f);
    let mut attr_draws = DMatrix::zeros(v_count, f);
    let mut edges = Vec::with_capacity(new_x.len());
    let mut attributes = Vec::with_capacity(new_x.len());
    for i in 0..new_x.len() {
        let x = new_x[i];
        let w = new_w.row(i);
        for (t, (s, beta)) in chain.states.iter().zip(&betas).enumerate() {
            let (ay, az) =
                if q > 0 { (w.dot(&s.gamma_y.transpose()), w.dot(&s.gamma_z.transpose())) } else { (0.0, 0.0) };
            let sd = s.tau_y2.sqrt();
            for e in 0..h {
                edge_draws[(e, t)] = s.mu_y + ay + beta[e] * x + sd * standard_normal(rng);
            }
            let z = predictive_field(s, x, az, &factors[&s.zeta.to_bits()], rng)?;
            attr_draws.column_mut(t).copy_from(&z);
        }
        let summarize_rows = |m: &DMatrix<f64>| -> Vec<Interval> {
            m.row_iter().map(|r| Interval::from_draws(r.transpose().as_slice(), level)).collect()
        };
        edges.push(summarize_rows(&edge_draws));
        attributes.push(summarize_rows(&attr_draws));
    }
    Ok(PredictiveSummary { level, edges, attributes })
}
