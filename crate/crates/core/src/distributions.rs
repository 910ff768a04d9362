//! Seeded random draws for every distribution family the sampler and the
//! simulator use.
//!
//! Scalar families delegate to `rand_distr`; multivariate normal,
//! inverse-Wishart (Bartlett construction), Dirichlet and log-space
//! categorical draws are built here.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// ChaCha8 generator identified by `(seed, stream)`.
///
/// Independent chains and replicates use distinct stream ids under one seed.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        StreamRng { inner, seed, stream }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh generator on another stream of the same seed.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_draw<R: RngCore + ?Sized>(mean: f64, variance: f64, rng: &mut R) -> Result<f64> {
    if !(variance.is_finite() && variance >= 0.0) || !mean.is_finite() {
        return Err(Error::invalid(format!("normal draw with mean {mean}, variance {variance}")));
    }
    Ok(mean + variance.sqrt() * standard_normal(rng))
}

/// `mean + chol · ε`, `ε` i.i.d. standard normal.
pub fn mvn_draw<R: RngCore + ?Sized>(mean: &DVector<f64>, chol: &DMatrix<f64>, rng: &mut R) -> Result<DVector<f64>> {
    let d = mean.len();
    if chol.nrows() != d || chol.ncols() != d {
        return Err(Error::invalid("covariance factor does not match mean dimension"));
    }
    if let Some(k) = (0..d).find(|&k| !(chol[(k, k)] > 0.0 && chol[(k, k)].is_finite())) {
        return Err(Error::invalid(format!(
            "covariance factor has non-positive diagonal entry {} at {}",
            chol[(k, k)],
            k
        )));
    }
    let eps = DVector::from_fn(d, |_, _| standard_normal(rng));
    Ok(mean + chol.lower_triangle() * eps)
}

/// Draw from `IG(shape, rate)`, density `∝ x^{-shape-1} e^{-rate/x}`.
pub fn inv_gamma_draw<R: RngCore + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(Error::invalid(format!("inverse-gamma needs positive parameters, got shape {shape}, rate {rate}")));
    }
    let g: f64 = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid(e.to_string()))?.sample(rng);
    let x = 1.0 / g;
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::numerical(format!("inverse-gamma draw overflowed (shape {shape}, rate {rate})")))
    }
}

fn gamma_draw<R: RngCore + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    Ok(Gamma::new(shape, 1.0).map_err(|e| Error::invalid(e.to_string()))?.sample(rng))
}

/// Draw from `IW(df, scale)` (mean `scale / (df − d − 1)`).
///
/// Bartlett construction: with `A` lower triangular, `A_kk² ~ χ²_{df−k}` and
/// `A_jk ~ N(0,1)` below the diagonal, `A Aᵀ ~ Wishart(df, I)`. With
/// `scale = U Uᵀ` the draw is `U A⁻ᵀ A⁻¹ Uᵀ`, so the scale is never inverted.
pub fn inv_wishart_draw<R: RngCore + ?Sized>(df: f64, scale: &DMatrix<f64>, rng: &mut R) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if scale.ncols() != d || d == 0 {
        return Err(Error::invalid("inverse-Wishart scale must be square and non-empty"));
    }
    if !(df.is_finite() && df > d as f64 - 1.0) {
        return Err(Error::invalid(format!(
            "inverse-Wishart degrees of freedom {df} must exceed dimension − 1 = {}",
            d - 1
        )));
    }
    let u =
        scale.clone().cholesky().ok_or_else(|| Error::invalid("inverse-Wishart scale is not positive definite"))?.l();
    let mut a = DMatrix::zeros(d, d);
    for k in 0..d {
        a[(k, k)] = (2.0 * gamma_draw((df - k as f64) / 2.0, rng)?).sqrt();
        for j in k + 1..d {
            a[(j, k)] = standard_normal(rng);
        }
    }
    // Bᵀ = A⁻¹ Uᵀ with B = U A⁻ᵀ.
    let bt = a.solve_lower_triangular(&u.transpose()).ok_or_else(|| Error::numerical("singular Bartlett factor"))?;
    let b = bt.transpose();
    let draw = &b * b.transpose();
    let draw = (&draw + draw.transpose()) * 0.5;
    if draw.clone().cholesky().is_none() {
        return Err(Error::numerical("inverse-Wishart draw is not positive definite"));
    }
    Ok(draw)
}

/// Draw from `Dirichlet(alpha)`; the components sum to one.
pub fn dirichlet_draw<R: RngCore + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::invalid(format!("Dirichlet concentration must be positive: {alpha:?}")));
    }
    let g = alpha.iter().map(|&a| gamma_draw(a, rng)).collect::<Result<Vec<_>>>()?;
    let total: f64 = g.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::numerical("Dirichlet gamma variates underflowed"));
    }
    let k = g.len();
    let mut p: Vec<f64> = g.iter().map(|x| x / total).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = (1.0 - head).max(0.0);
    Ok(p)
}

pub fn beta_draw<R: RngCore + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("Beta needs positive parameters, got {a}, {b}")));
    }
    let x = gamma_draw(a, rng)?;
    let y = gamma_draw(b, rng)?;
    let p = x / (x + y);
    if p.is_nan() {
        return Err(Error::numerical("Beta draw underflowed"));
    }
    Ok(p)
}

pub fn bernoulli_draw<R: RngCore + ?Sized>(p: f64, rng: &mut R) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("Bernoulli probability {p} outside [0, 1]")));
    }
    let u: f64 = rng.random();
    Ok(u < p)
}

/// Normalized probabilities from unnormalized log-weights (max-subtracted).
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
        return Err(Error::invalid(format!("log-weights must be finite or −∞: {log_weights:?}")));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::invalid("all log-weights are −∞"));
    }
    let w: Vec<f64> = log_weights.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Index drawn with probability proportional to `exp(log_weights)`.
///
/// Always consumes exactly one uniform variate.
pub fn categorical_draw<R: RngCore + ?Sized>(log_weights: &[f64], rng: &mut R) -> Result<usize> {
    let p = normalize_log_weights(log_weights)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &pk) in p.iter().enumerate() {
        if pk > 0.0 {
            last_positive = k;
            acc += pk;
            if u < acc {
                return Ok(k);
            }
        }
    }
    Ok(last_positive)
}

/// `log(p / (1 − p))`-safe conversion of a log-odds value to a probability.
pub fn logistic(log_odds: f64) -> f64 {
    if log_odds >= 0.0 {
        1.0 / (1.0 + (-log_odds).exp())
    } else {
        let e = log_odds.exp();
        e / (1.0 + e)
    }
}
