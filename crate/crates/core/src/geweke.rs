//! Joint-distribution test of the sampler.
//!
//! Marginal-conditional draws sample parameters from the prior. The
//! successive-conditional chain alternates one Gibbs sweep with fresh data
//! drawn given the current parameters. If every conditional is right, both
//! simulators target the same joint distribution, so monitored functions of
//! the parameters agree in mean. A proper prior is required, so the
//! intercepts and auxiliary effects get `N(0, s²)`.

use nalgebra::{DMatrix, DVector};

use crate::distributions::{
    bernoulli_draw, beta_draw, categorical_draw, dirichlet_draw, inv_gamma_draw, inv_wishart_draw, mvn_draw,
    normal_draw, StreamRng,
};
use crate::error::{Error, Result};
use crate::gibbs::{effective_sample_size, Sampler};
use crate::model::{
    beta_vector, Dataset, Hyperparameters, KernelSet, ModelState, Point3, SamplerConfig, LAMBDA_VALUES,
};
use crate::simulate::{draw_responses, draw_spatial_effects};

/// Scalar function of the parameters compared between the two simulators.
pub type Monitor = (&'static str, fn(&ModelState) -> f64);

pub fn monitors() -> Vec<Monitor> {
    vec![
        ("mu_y", |s| s.mu_y),
        ("mu_y^2", |s| s.mu_y * s.mu_y),
        ("mu_z", |s| s.mu_z),
        ("gamma_y[1]", |s| s.gamma_y[0]),
        ("gamma_z[1]", |s| s.gamma_z[0]),
        ("tau_y2", |s| s.tau_y2),
        ("tau_z2", |s| s.tau_z2),
        ("delta", |s| s.delta),
        ("active nodes", |s| s.active_count() as f64),
        ("alpha(1)", |s| s.xi[0][0]),
        ("alpha(1)^2", |s| s.xi[0][0] * s.xi[0][0]),
        ("theta_1(1)", |s| s.xi[0][1]),
        ("theta_1(1)^2", |s| s.xi[0][1] * s.xi[0][1]),
        ("beta(1,2)", |s| beta_vector(&s.lambda, &s.xi).map_or(f64::NAN, |b| b[0])),
        ("1[lambda_1 = 0]", |s| f64::from(u8::from(s.lambda[0] == 0))),
        ("L_11", |s| s.l[(0, 0)]),
        ("zeta", |s| s.zeta),
    ]
}

/// Fixed design of the test: predictors, auxiliaries and coordinates.
#[derive(Debug, Clone)]
pub struct GewekeDesign {
    pub predictor: DVector<f64>,
    pub auxiliaries: DMatrix<f64>,
    pub coords: Vec<Point3>,
}

impl GewekeDesign {
    /// Random design with `n` subjects, `v` nodes and `q` auxiliaries.
    pub fn random(n: usize, v: usize, q: usize, rng: &mut StreamRng) -> Self {
        use crate::distributions::standard_normal;
        GewekeDesign {
            predictor: DVector::from_fn(n, |_, _| standard_normal(rng)),
            auxiliaries: DMatrix::from_fn(n, q, |_, _| standard_normal(rng)),
            coords: (0..v).map(|_| [standard_normal(rng), standard_normal(rng), standard_normal(rng)]).collect(),
        }
    }
}

/// Prior settings under which the monitored functions have finite variance.
pub fn default_hyper(rank: usize) -> Hyperparameters {
    let mut h = Hyperparameters::with_rank(rank);
    h.iw_df = rank as f64 + 8.0;
    h.ig_shape = 6.0;
    h.ig_rate = 5.0;
    h.zeta_grid = vec![0.2, 0.6, 1.5];
    h.coefficient_prior_variance = Some(1.0);
    h.iterations = 1;
    h.burnin = 0;
    h
}

fn kernels_for(
    design: &GewekeDesign,
    hyper: &Hyperparameters,
    config: &SamplerConfig,
) -> Result<(KernelSet, Vec<f64>)> {
    if config.spatial {
        Ok((
            KernelSet::exponential_grid(&design.coords, &hyper.zeta_grid, hyper.kernel_jitter)?,
            hyper.zeta_grid.clone(),
        ))
    } else {
        Ok((KernelSet::identity(design.coords.len()), vec![f64::INFINITY]))
    }
}

/// One draw from the prior.
pub fn prior_draw(
    hyper: &Hyperparameters,
    nodes: usize,
    aux: usize,
    zeta_values: &[f64],
    rng: &mut StreamRng,
) -> Result<ModelState> {
    let s2 = hyper
        .coefficient_prior_variance
        .ok_or_else(|| Error::invalid("prior draws need a proper coefficient prior"))?;
    let r = hyper.rank;
    let mu_y = normal_draw(0.0, s2, rng)?;
    let mu_z = normal_draw(0.0, s2, rng)?;
    let gamma_y = DVector::from_iterator(aux, (0..aux).map(|_| normal_draw(0.0, s2, rng)).collect::<Result<Vec<_>>>()?);
    let gamma_z = DVector::from_iterator(aux, (0..aux).map(|_| normal_draw(0.0, s2, rng)).collect::<Result<Vec<_>>>()?);
    let tau_y2 = inv_gamma_draw(hyper.ig_shape, hyper.ig_rate, rng)?;
    let tau_z2 = inv_gamma_draw(hyper.ig_shape, hyper.ig_rate, rng)?;
    let delta = beta_draw(hyper.delta_a, hyper.delta_b, rng)?.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    let l = inv_wishart_draw(hyper.iw_df, &hyper.iw_scale, rng)?;
    let mut pi = Vec::with_capacity(r);
    let mut lambda = Vec::with_capacity(r);
    for k in 0..r {
        let p = dirichlet_draw(&[((k + 1) as f64).powf(hyper.dirichlet_exponent), 1.0, 1.0], rng)?;
        let logs: Vec<f64> = p.iter().map(|x| x.ln()).collect();
        lambda.push(LAMBDA_VALUES[categorical_draw(&logs, rng)?]);
        pi.push([p[0], p[1], p[2]]);
    }
    let chol = l.clone().cholesky().ok_or_else(|| Error::numerical("prior L draw is not positive definite"))?.l();
    let mut eta = Vec::with_capacity(nodes);
    let mut xi = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let e = bernoulli_draw(delta, rng)?;
        eta.push(e);
        xi.push(if e { mvn_draw(&DVector::zeros(r + 1), &chol, rng)? } else { DVector::zeros(r + 1) });
    }
    let logs = vec![0.0; zeta_values.len()];
    let zeta_index = categorical_draw(&logs, rng)?;
    Ok(ModelState {
        mu_y,
        mu_z,
        gamma_y,
        gamma_z,
        tau_y2,
        tau_z2,
        delta,
        l,
        lambda,
        pi,
        eta,
        xi,
        zeta_index,
        zeta: zeta_values[zeta_index],
    })
}

/// Data drawn from the likelihood at `state`.
pub fn simulate_data(
    design: &GewekeDesign,
    state: &ModelState,
    kernels: &KernelSet,
    rng: &mut StreamRng,
) -> Result<Dataset> {
    let n = design.predictor.len();
    let effects = draw_spatial_effects(n, state.tau_z2, kernels.get(state.zeta_index), rng)?;
    let (edges, attrs) = draw_responses(&design.predictor, &design.auxiliaries, state, &effects, rng)?;
    Dataset::from_edges(
        design.coords.len(),
        edges,
        attrs,
        design.predictor.clone(),
        design.auxiliaries.clone(),
        design.coords.clone(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeStatistic {
    pub name: &'static str,
    pub marginal_mean: f64,
    pub successive_mean: f64,
    pub successive_ess: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GewekeResult {
    pub statistics: Vec<GewekeStatistic>,
}

impl GewekeResult {
    pub fn max_abs_z(&self) -> f64 {
        self.statistics.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }
}

/// Runs `draws` marginal-conditional and `draws` successive-conditional
/// iterations and compares every monitor.
pub fn geweke_test(
    design: &GewekeDesign,
    hyper: &Hyperparameters,
    config: SamplerConfig,
    draws: usize,
    rng: &mut StreamRng,
) -> Result<GewekeResult> {
    if draws < 10 {
        return Err(Error::invalid("Geweke test needs at least 10 draws per simulator"));
    }
    let (kernels, zeta_values) = kernels_for(design, hyper, &config)?;
    let v_count = design.coords.len();
    let q = design.auxiliaries.ncols();
    let monitors = monitors();

    let mut marginal = vec![Vec::with_capacity(draws); monitors.len()];
    for _ in 0..draws {
        let s = prior_draw(hyper, v_count, q, &zeta_values, rng)?;
        for (m, (_, f)) in monitors.iter().enumerate() {
            marginal[m].push(f(&s));
        }
    }

    let mut successive = vec![Vec::with_capacity(draws); monitors.len()];
    let mut state = prior_draw(hyper, v_count, q, &zeta_values, rng)?;
    let mut data = simulate_data(design, &state, &kernels, rng)?;
    for _ in 0..draws {
        let sampler = Sampler::new(&data, hyper, config)?;
        sampler.sweep(&mut state, rng)?;
        for (m, (_, f)) in monitors.iter().enumerate() {
            successive[m].push(f(&state));
        }
        data = simulate_data(design, &state, &kernels, rng)?;
    }

    let statistics = monitors
        .iter()
        .zip(marginal.iter().zip(&successive))
        .map(|((name, _), (a, b))| {
            let (ma, va) = mean_var(a);
            let (mb, vb) = mean_var(b);
            let ess = effective_sample_size(b);
            let se = (va / a.len() as f64 + vb / ess).sqrt();
            let z = if se > 0.0 { (ma - mb) / se } else { 0.0 };
            GewekeStatistic { name, marginal_mean: ma, successive_mean: mb, successive_ess: ess, z }
        })
        .collect();
    Ok(GewekeResult { statistics })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}
