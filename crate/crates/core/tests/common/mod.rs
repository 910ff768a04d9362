//! Dense reference implementations shared by the integration tests.
//!
//! Everything here is written from the model definition with explicit
//! loops and full covariance matrices, never through the sampler's
//! sufficient statistics.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{Beta, Continuous, InverseGamma, Normal};
use statrs::function::gamma::ln_gamma;

use spatial_joint::distributions::StreamRng;
use spatial_joint::geweke::{default_hyper, prior_draw, simulate_data, GewekeDesign};
use spatial_joint::gibbs::{
    cond_delta, cond_eta_v, cond_gamma_y, cond_gamma_z, cond_l, cond_lambda_r, cond_mu_y, cond_mu_z, cond_pi_r,
    cond_tau_y2, cond_tau_z2, cond_xi_v, cond_zeta, Sampler, SweepPlan,
};
use spatial_joint::model::{
    beta_from_latent, AttributeConditioning, Dataset, Hyperparameters, KernelSet, ModelState, SamplerConfig,
};

/// `log N(x | mean, cov)` through a dense Cholesky factor.
pub fn mvn_logpdf(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = cov.clone().cholesky().expect("covariance is positive definite");
    let r = x - mean;
    let sol = chol.solve(&r);
    let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (x.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + r.dot(&sol))
}

/// Dense kernel `exp(−ζ‖s_u − s_v‖) + jitter·I`, or `I` for `ζ = ∞`.
pub fn dense_kernel(data: &Dataset, zeta: f64, jitter: f64) -> DMatrix<f64> {
    let c = data.coords();
    let v = c.len();
    if zeta.is_infinite() {
        return DMatrix::identity(v, v);
    }
    DMatrix::from_fn(v, v, |a, b| {
        let d = ((c[a][0] - c[b][0]).powi(2) + (c[a][1] - c[b][1]).powi(2) + (c[a][2] - c[b][2]).powi(2)).sqrt();
        (-zeta * d).exp() + if a == b { jitter } else { 0.0 }
    })
}

/// `β(u, v) = Σ_r λ_r θ_r(u) θ_r(v)` by explicit summation.
pub fn dense_beta(state: &ModelState) -> DMatrix<f64> {
    let v = state.xi.len();
    let r = state.lambda.len();
    DMatrix::from_fn(v, v, |a, b| {
        if a == b {
            return 0.0;
        }
        (0..r).map(|k| state.lambda[k] as f64 * state.xi[a][k + 1] * state.xi[b][k + 1]).sum()
    })
}

/// Unnormalized log joint density of data and parameters.
pub struct Oracle<'a> {
    pub data: &'a Dataset,
    pub hyper: &'a Hyperparameters,
    /// Diagonal jitter the sampler used for the kernel at each grid point.
    pub jitter: Vec<f64>,
    pub grid: Vec<f64>,
    pub config: SamplerConfig,
}

impl Oracle<'_> {
    fn sigma(&self, state: &ModelState) -> DMatrix<f64> {
        if !self.config.spatial {
            return DMatrix::identity(self.data.nodes(), self.data.nodes());
        }
        dense_kernel(self.data, state.zeta, self.jitter[state.zeta_index])
    }

    pub fn log_likelihood(&self, state: &ModelState) -> f64 {
        let data = self.data;
        let (n, v) = (data.subjects(), data.nodes());
        let x = data.predictor();
        let w = data.auxiliaries();
        let beta = dense_beta(state);
        let mut ll = 0.0;
        for i in 0..n {
            let wy: f64 = (0..w.ncols()).map(|k| w[(i, k)] * state.gamma_y[k]).sum();
            let wz: f64 = (0..w.ncols()).map(|k| w[(i, k)] * state.gamma_z[k]).sum();
            if self.config.network {
                let m = data.network_matrix(i);
                let sd = state.tau_y2.sqrt();
                for a in 0..v {
                    for b in a + 1..v {
                        let mean = state.mu_y + beta[(a, b)] * x[i] + wy;
                        ll += Normal::new(mean, sd).unwrap().ln_pdf(m[(a, b)]);
                    }
                }
            }
            if self.config.attributes {
                let mean = DVector::from_fn(v, |u, _| state.mu_z + state.xi[u][0] * x[i] + wz);
                ll += mvn_logpdf(data.attributes(i), &mean, &(self.sigma(state) * state.tau_z2));
            }
        }
        ll
    }

    pub fn log_prior(&self, state: &ModelState) -> f64 {
        let h = self.hyper;
        let mut lp = 0.0;
        if let Some(s2) = h.coefficient_prior_variance {
            let nrm = Normal::new(0.0, s2.sqrt()).unwrap();
            lp += nrm.ln_pdf(state.mu_y) + nrm.ln_pdf(state.mu_z);
            lp += state.gamma_y.iter().chain(state.gamma_z.iter()).map(|&g| nrm.ln_pdf(g)).sum::<f64>();
        }
        let ig = InverseGamma::new(h.ig_shape, h.ig_rate).unwrap();
        lp += ig.ln_pdf(state.tau_y2) + ig.ln_pdf(state.tau_z2);
        lp += Beta::new(h.delta_a, h.delta_b).unwrap().ln_pdf(state.delta);
        lp += iw_log_kernel(&state.l, h.iw_df, &h.iw_scale);
        for (k, p) in state.pi.iter().enumerate() {
            let conc = [((k + 1) as f64).powf(h.dirichlet_exponent), 1.0, 1.0];
            lp += dirichlet_logpdf(p, &conc);
            let idx = match state.lambda[k] {
                0 => 0,
                1 => 1,
                _ => 2,
            };
            lp += p[idx].ln();
        }
        for (e, xi) in state.eta.iter().zip(&state.xi) {
            if *e {
                lp += state.delta.ln() + mvn_logpdf(xi, &DVector::zeros(xi.len()), &state.l);
            } else {
                assert!(xi.iter().all(|&c| c == 0.0));
                lp += (1.0 - state.delta).ln();
            }
        }
        lp
    }

    pub fn log_joint(&self, state: &ModelState) -> f64 {
        self.log_likelihood(state) + self.log_prior(state)
    }
}

/// Inverse-Wishart log density up to a constant in `X`.
pub fn iw_log_kernel(x: &DMatrix<f64>, df: f64, scale: &DMatrix<f64>) -> f64 {
    let d = x.nrows() as f64;
    let chol = x.clone().cholesky().expect("SPD");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    -(df + d + 1.0) / 2.0 * logdet - 0.5 * (scale * chol.inverse()).trace()
}

pub fn dirichlet_logpdf(p: &[f64; 3], a: &[f64; 3]) -> f64 {
    let norm = ln_gamma(a.iter().sum()) - a.iter().map(|&x| ln_gamma(x)).sum::<f64>();
    norm + p.iter().zip(a).map(|(&pi, &ai)| (ai - 1.0) * pi.ln()).sum::<f64>()
}

/// Largest `|d_oracle − d_claimed| / max(1, |d_oracle|)` over log-density
/// differences against the first point.
pub fn difference_error(points: &[ModelState], oracle: &Oracle<'_>, claimed: impl Fn(&ModelState) -> f64) -> f64 {
    let o0 = oracle.log_joint(&points[0]);
    let c0 = claimed(&points[0]);
    points[1..]
        .iter()
        .map(|s| {
            let d = oracle.log_joint(s) - o0;
            let c = claimed(s) - c0;
            (d - c).abs() / d.abs().max(1.0)
        })
        .fold(0.0, f64::max)
}

/// Largest relative error between two probability vectors.
pub fn probability_error(claimed: &[f64], oracle: &[f64]) -> f64 {
    claimed.iter().zip(oracle).map(|(c, o)| (c - o).abs() / o.max(1e-300)).fold(0.0, f64::max)
}

fn normalize(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// `‖a − b‖∞ / ‖b‖∞`.
pub fn matrix_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

/// Small random instance drawn from a proper prior.
pub struct Instance {
    pub data: Dataset,
    pub state: ModelState,
    pub hyper: Hyperparameters,
    pub kernels: KernelSet,
    pub config: SamplerConfig,
}

impl Instance {
    pub fn random(seed: u64, n: usize, v: usize, r: usize, q: usize, spatial: bool, flat: bool) -> Self {
        let mut rng = StreamRng::new(seed, 0);
        let design = GewekeDesign::random(n, v, q, &mut rng);
        let hyper = default_hyper(r);
        let config = SamplerConfig { spatial, ..SamplerConfig::spatial_joint() };
        let (kernels, grid) = if spatial {
            (
                KernelSet::exponential_grid(&design.coords, &hyper.zeta_grid, hyper.kernel_jitter).unwrap(),
                hyper.zeta_grid.clone(),
            )
        } else {
            (KernelSet::identity(v), vec![f64::INFINITY])
        };
        let mut state = prior_draw(&hyper, v, q, &grid, &mut rng).unwrap();
        // At least one active and one inactive node when V allows it.
        state.eta[0] = true;
        if state.xi[0].iter().all(|&c| c == 0.0) {
            state.xi[0] = DVector::from_fn(r + 1, |k, _| 0.5 - 0.3 * k as f64);
        }
        if v > 2 {
            state.eta[v - 1] = false;
            state.xi[v - 1] = DVector::zeros(r + 1);
        }
        state.delta = state.delta.clamp(0.05, 0.95);
        let data = simulate_data(&design, &state, &kernels, &mut rng).unwrap();
        let mut hyper = hyper;
        if flat {
            hyper.coefficient_prior_variance = None;
        }
        Instance { data, state, hyper, kernels, config }
    }

    pub fn oracle(&self) -> Oracle<'_> {
        Oracle {
            data: &self.data,
            hyper: &self.hyper,
            jitter: self.kernels.iter().map(|k| k.jitter()).collect(),
            grid: self.kernels.iter().map(|k| k.zeta()).collect(),
            config: self.config,
        }
    }
}

/// Per-block worst relative error of the closed-form conditionals against
/// the dense oracle on one instance.
pub fn conjugacy_errors(inst: &Instance) -> Vec<(&'static str, f64)> {
    let (data, hyper, s0) = (&inst.data, &inst.hyper, &inst.state);
    let oracle = inst.oracle();
    let kernel = inst.kernels.get(s0.zeta_index);
    let offsets = [-1.7, -0.4, 0.3, 1.1, 2.2];
    let mut out = Vec::new();

    let scalar = |get: fn(&mut ModelState) -> &mut f64, mean: f64, var: f64| {
        let sd = var.sqrt();
        let points: Vec<ModelState> = offsets
            .iter()
            .map(|o| {
                let mut s = s0.clone();
                *get(&mut s) = mean + o * sd;
                s
            })
            .collect();
        let nrm = Normal::new(mean, sd).unwrap();
        difference_error(&points, &oracle, |s| nrm.ln_pdf(*get(&mut s.clone())))
    };

    let p = cond_mu_y(data, s0, hyper).unwrap();
    out.push(("mu_y", scalar(|s| &mut s.mu_y, p.mean, p.variance)));
    let p = cond_mu_z(data, s0, hyper, kernel).unwrap();
    out.push(("mu_z", scalar(|s| &mut s.mu_z, p.mean, p.variance)));

    let vector = |set: fn(&mut ModelState, DVector<f64>), mean: &DVector<f64>, cov: &DMatrix<f64>| {
        let q = mean.len();
        let points: Vec<ModelState> = offsets
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let mut s = s0.clone();
                let shift = DVector::from_fn(q, |k, _| o * (1.0 + 0.37 * ((j + k) % 3) as f64));
                set(&mut s, mean + shift);
                s
            })
            .collect();
        (points, mean.clone(), cov.clone())
    };
    if data.aux_count() > 0 {
        let p = cond_gamma_y(data, s0, hyper).unwrap();
        let (points, m, c) = vector(|s, g| s.gamma_y = g, &p.mean, &p.cov);
        out.push(("gamma_y", difference_error(&points, &oracle, |s| mvn_logpdf(&s.gamma_y, &m, &c))));
        let p = cond_gamma_z(data, s0, hyper, kernel).unwrap();
        let (points, m, c) = vector(|s, g| s.gamma_z = g, &p.mean, &p.cov);
        out.push(("gamma_z", difference_error(&points, &oracle, |s| mvn_logpdf(&s.gamma_z, &m, &c))));
    }

    let inv_gamma = |get: fn(&mut ModelState) -> &mut f64, shape: f64, rate: f64| {
        let ig = InverseGamma::new(shape, rate).unwrap();
        let mode = rate / (shape + 1.0);
        let points: Vec<ModelState> = [0.5, 0.8, 1.0, 1.3, 2.0]
            .iter()
            .map(|f| {
                let mut s = s0.clone();
                *get(&mut s) = mode * f;
                s
            })
            .collect();
        difference_error(&points, &oracle, |s| ig.ln_pdf(*get(&mut s.clone())))
    };
    let p = cond_tau_y2(data, s0, hyper).unwrap();
    out.push(("tau_y2", inv_gamma(|s| &mut s.tau_y2, p.shape, p.rate)));
    let p = cond_tau_z2(data, s0, hyper, kernel).unwrap();
    out.push(("tau_z2", inv_gamma(|s| &mut s.tau_z2, p.shape, p.rate)));

    let p = cond_delta(s0, hyper);
    let beta = Beta::new(p.a, p.b).unwrap();
    let points: Vec<ModelState> =
        [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&d| ModelState { delta: d, ..s0.clone() }).collect();
    out.push(("delta", difference_error(&points, &oracle, |s| beta.ln_pdf(s.delta))));

    let p = cond_l(s0, hyper);
    let d = hyper.rank + 1;
    let points: Vec<ModelState> = (0..5)
        .map(|j| {
            let a = DMatrix::from_fn(d, d, |r, c| ((r * 7 + c * 3 + j * 5) % 11) as f64 / 11.0 - 0.4);
            let l = &a * a.transpose() + DMatrix::identity(d, d) * (0.3 + 0.2 * j as f64);
            ModelState { l, ..s0.clone() }
        })
        .collect();
    out.push(("L", difference_error(&points, &oracle, |s| iw_log_kernel(&s.l, p.df, &p.scale))));

    let mut pi_err: f64 = 0.0;
    let mut lambda_err: f64 = 0.0;
    for r in 0..hyper.rank {
        let conc = cond_pi_r(r, s0, hyper);
        let points: Vec<ModelState> =
            [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4], [0.05, 0.9, 0.05], [0.7, 0.2, 0.1]]
                .iter()
                .map(|p| {
                    let mut s = s0.clone();
                    s.pi[r] = *p;
                    s
                })
                .collect();
        pi_err = pi_err.max(difference_error(&points, &oracle, |s| dirichlet_logpdf(&s.pi[r], &conc)));

        let logs: Vec<f64> = [0i8, 1, -1]
            .iter()
            .map(|&l| {
                let mut s = s0.clone();
                s.lambda[r] = l;
                oracle.log_joint(&s)
            })
            .collect();
        let claimed = cond_lambda_r(r, data, s0).unwrap();
        lambda_err = lambda_err.max(probability_error(&claimed, &normalize(&logs)));
    }
    out.push(("pi_r", pi_err));
    out.push(("lambda_r", lambda_err));

    if inst.config.spatial {
        let logs: Vec<f64> = oracle
            .grid
            .iter()
            .enumerate()
            .map(|(l, &z)| oracle.log_joint(&ModelState { zeta_index: l, zeta: z, ..s0.clone() }))
            .collect();
        let claimed = cond_zeta(data, s0, &inst.kernels).unwrap();
        out.push(("zeta", probability_error(&claimed, &normalize(&logs))));
    }

    let (mean_err, cov_err, eta_err) = slab_errors(inst);
    out.push(("xi_v mean", mean_err));
    out.push(("xi_v cov", cov_err));
    out.push(("eta_v", eta_err));
    out
}

/// Stacked responses `f = c + A ξ_v + e`, `e ~ N(0, D)`, with dense `D`.
struct Stacked {
    obs: DVector<f64>,
    offset: DVector<f64>,
    design: DMatrix<f64>,
    noise: DMatrix<f64>,
}

fn stack(inst: &Instance, state: &ModelState, v: usize) -> Stacked {
    let (data, config) = (&inst.data, inst.config);
    let (n, vn) = (data.subjects(), data.nodes());
    let r = state.lambda.len();
    let x = data.predictor();
    let w = data.auxiliaries();
    let mut spike = state.clone();
    spike.xi[v] = DVector::zeros(r + 1);
    let beta0 = dense_beta(&spike);
    let sigma = if config.spatial {
        dense_kernel(data, state.zeta, inst.kernels.get(state.zeta_index).jitter())
    } else {
        DMatrix::identity(vn, vn)
    };
    let mut obs = Vec::new();
    let mut offset = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut var_blocks: Vec<DMatrix<f64>> = Vec::new();
    for i in 0..n {
        let wy: f64 = (0..w.ncols()).map(|k| w[(i, k)] * state.gamma_y[k]).sum();
        let wz: f64 = (0..w.ncols()).map(|k| w[(i, k)] * state.gamma_z[k]).sum();
        if config.network {
            let m = data.network_matrix(i);
            for a in 0..vn {
                for b in a + 1..vn {
                    obs.push(m[(a, b)]);
                    offset.push(state.mu_y + beta0[(a, b)] * x[i] + wy);
                    let mut row = vec![0.0; r + 1];
                    if a == v || b == v {
                        let o = if a == v { b } else { a };
                        for k in 0..r {
                            row[k + 1] = state.lambda[k] as f64 * state.xi[o][k + 1] * x[i];
                        }
                    }
                    rows.push(row);
                    var_blocks.push(DMatrix::from_element(1, 1, state.tau_y2));
                }
            }
        }
        if config.attributes {
            let z = data.attributes(i);
            for u in 0..vn {
                obs.push(z[u]);
                offset.push(state.mu_z + if u == v { 0.0 } else { state.xi[u][0] * x[i] } + wz);
                let mut row = vec![0.0; r + 1];
                if u == v {
                    row[0] = x[i];
                }
                rows.push(row);
            }
            var_blocks.push(&sigma * state.tau_z2);
        }
    }
    let total = obs.len();
    let mut noise = DMatrix::zeros(total, total);
    let mut at = 0;
    for b in &var_blocks {
        let k = b.nrows();
        noise.view_mut((at, at), (k, k)).copy_from(b);
        at += k;
    }
    Stacked {
        obs: DVector::from_vec(obs),
        offset: DVector::from_vec(offset),
        design: DMatrix::from_fn(total, r + 1, |a, c| rows[a][c]),
        noise,
    }
}

/// Dense slab posterior and inclusion probability for node `v`.
pub fn dense_slab(inst: &Instance, state: &ModelState, v: usize) -> (DVector<f64>, DMatrix<f64>, f64) {
    let st = stack(inst, state, v);
    let d_inv = st.noise.clone().try_inverse().unwrap();
    let l_inv = state.l.clone().try_inverse().unwrap();
    let a = &st.design;
    let resid = &st.obs - &st.offset;
    let precision = &l_inv + a.transpose() * &d_inv * a;
    let cov = precision.try_inverse().unwrap();
    let mean = &cov * (a.transpose() * &d_inv * &resid);
    let slab = mvn_logpdf(&st.obs, &st.offset, &(a * &state.l * a.transpose() + &st.noise));
    let spike = mvn_logpdf(&st.obs, &st.offset, &st.noise);
    let logit = state.delta.ln() - (1.0 - state.delta).ln() + slab - spike;
    (mean, cov, 1.0 / (1.0 + (-logit).exp()))
}

fn slab_errors(inst: &Instance) -> (f64, f64, f64) {
    let kernel = inst.kernels.get(inst.state.zeta_index);
    let (mut me, mut ce, mut pe) = (0.0f64, 0.0f64, 0.0f64);
    for v in 0..inst.data.nodes() {
        let (mean, cov, prob) = dense_slab(inst, &inst.state, v);
        let post = cond_xi_v(v, &inst.data, &inst.state, kernel, &inst.config).unwrap();
        let p = cond_eta_v(v, &inst.data, &inst.state, kernel, &inst.config).unwrap();
        me = me.max((&post.mean - &mean).amax() / mean.amax().max(1e-300));
        ce = ce.max(matrix_error(&post.cov, &cov));
        pe = pe.max(probability_error(&[p, 1.0 - p], &[prob, 1.0 - prob]));
    }
    (me, ce, pe)
}

/// Instances covering `n ≤ 3`, `V ≤ 4`, `R ≤ 2`, both priors and both
/// kernels.
pub fn conjugacy_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = 100;
    for &(n, v, r, q) in &[(3, 4, 2, 1), (2, 3, 2, 1), (3, 4, 1, 0), (3, 3, 2, 0), (2, 4, 1, 1)] {
        for &(spatial, flat) in &[(true, false), (true, true), (false, false)] {
            if flat && q > 0 && n <= q {
                continue;
            }
            seed += 1;
            out.push(Instance::random(seed, n, v, r, q, spatial, flat));
        }
    }
    out
}

/// Worst error per block over all instances.
pub fn conjugacy_table() -> Vec<(&'static str, f64)> {
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    for inst in conjugacy_instances() {
        for (name, e) in conjugacy_errors(&inst) {
            match worst.iter_mut().find(|(n, _)| *n == name) {
                Some(w) => w.1 = w.1.max(e),
                None => worst.push((name, e)),
            }
        }
    }
    worst
}

pub fn verbatim(inst: &Instance) -> Instance {
    Instance {
        data: inst.data.clone(),
        state: inst.state.clone(),
        hyper: inst.hyper.clone(),
        kernels: inst.kernels.clone(),
        config: SamplerConfig { conditioning: AttributeConditioning::Verbatim, ..inst.config },
    }
}

/// Structural checks that must hold after every sweep, beyond
/// `ModelState::validate`.
pub fn check_state(state: &ModelState, inst: &Instance, grid: &[f64]) -> Result<(), String> {
    let (v, r, q) = (inst.data.nodes(), state.rank(), inst.data.aux_count());
    state.validate(v, r, q).map_err(|e| e.to_string())?;
    if grid.get(state.zeta_index) != Some(&state.zeta) {
        return Err(format!("ζ = {} does not match grid index {}", state.zeta, state.zeta_index));
    }
    let beta = beta_from_latent(&state.lambda, &state.xi).map_err(|e| e.to_string())?;
    if beta != beta.transpose() || beta.diagonal().iter().any(|&d| d != 0.0) {
        return Err("β is not symmetric with zero diagonal".into());
    }
    for u in (0..v).filter(|&u| !state.eta[u]) {
        if beta.row(u).iter().any(|&b| b != 0.0) {
            return Err(format!("inactive node {} has a nonzero β row", u + 1));
        }
    }
    Ok(())
}

/// Runs `cases` random starting states through `sweeps` scans each,
/// with random dimensions, sampler configuration and scan order. Returns
/// the number of sweeps checked.
pub fn fuzz_sweeps(cases: u64, sweeps: usize) -> Result<usize, String> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let configs = [
        SamplerConfig::spatial_joint(),
        SamplerConfig { conditioning: AttributeConditioning::Verbatim, ..SamplerConfig::spatial_joint() },
        SamplerConfig::non_spatial_joint(),
        SamplerConfig::network_only(),
        SamplerConfig::attribute_only(),
    ];
    let mut checked = 0;
    for case in 0..cases {
        let mut rng = StreamRng::new(0xF0, case);
        let (n, v, r, q) =
            (rng.random_range(1..=5), rng.random_range(2..=7), rng.random_range(1..=3), rng.random_range(0..=2));
        let config = configs[case as usize % configs.len()];
        let mut inst = Instance::random(1000 + case, n, v, r, q, config.spatial, false);
        inst.config = config;
        // Push the start away from the generating values.
        inst.state.tau_y2 *= 10f64.powf(rng.random_range(-2.0..2.0));
        inst.state.tau_z2 *= 10f64.powf(rng.random_range(-2.0..2.0));
        inst.state.mu_y += rng.random_range(-5.0..5.0);
        for x in inst.state.xi.iter_mut().filter(|x| x.iter().any(|&c| c != 0.0)) {
            *x *= rng.random_range(0.1..10.0);
        }
        let mut order = SweepPlan::DEFAULT_ORDER.to_vec();
        order.shuffle(&mut rng);
        let sampler = Sampler::new(&inst.data, &inst.hyper, config)
            .map_err(|e| e.to_string())?
            .with_plan(SweepPlan::new(order).map_err(|e| e.to_string())?);
        let grid: Vec<f64> = sampler.kernels().iter().map(|k| k.zeta()).collect();
        let mut state = inst.state.clone();
        check_state(&state, &inst, &grid).map_err(|e| format!("case {case} start: {e}"))?;
        for s in 0..sweeps {
            sampler.sweep(&mut state, &mut rng).map_err(|e| format!("case {case} sweep {s}: {e}"))?;
            check_state(&state, &inst, &grid).map_err(|e| format!("case {case} sweep {s}: {e}"))?;
            checked += 1;
        }
    }
    Ok(checked)
}
