use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};

/// One point in parameter space.
///
/// `xi[v]` stores `α(v)` first and `θ(v)` (length `R`) after it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub mu_y: f64,
    pub mu_z: f64,
    pub gamma_y: DVector<f64>,
    pub gamma_z: DVector<f64>,
    pub tau_y2: f64,
    pub tau_z2: f64,
    /// Prior inclusion probability `Δ`.
    pub delta: f64,
    /// Slab covariance `L`, `(R+1) × (R+1)`.
    pub l: DMatrix<f64>,
    /// `λ_r ∈ {-1, 0, 1}`.
    pub lambda: Vec<i8>,
    /// `(π_{1,r}, π_{2,r}, π_{3,r})`: probabilities of `λ_r = 0, 1, -1`.
    pub pi: Vec<[f64; 3]>,
    pub eta: Vec<bool>,
    pub xi: Vec<DVector<f64>>,
    /// Index into the ζ grid of the sampler's kernel set.
    pub zeta_index: usize,
    /// Value of ζ; `+∞` for the identity kernel.
    pub zeta: f64,
}

/// Candidate values of `λ_r`, in the order used for probability triples.
pub const LAMBDA_VALUES: [i8; 3] = [0, 1, -1];

impl ModelState {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn nodes(&self) -> usize {
        self.eta.len()
    }

    pub fn alpha(&self, v: usize) -> f64 {
        self.xi[v][0]
    }

    pub fn theta(&self, v: usize) -> DVectorView<'_, f64> {
        self.xi[v].rows(1, self.rank())
    }

    /// `α̃ = (α(1), …, α(V))ᵀ`.
    pub fn alpha_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.nodes(), self.xi.iter().map(|x| x[0]))
    }

    /// `V × R` matrix with row `v` equal to `θ(v)ᵀ`.
    pub fn theta_matrix(&self) -> DMatrix<f64> {
        let r = self.rank();
        DMatrix::from_fn(self.nodes(), r, |v, k| self.xi[v][k + 1])
    }

    pub fn active_count(&self) -> usize {
        self.eta.iter().filter(|&&e| e).count()
    }

    /// Checks every structural invariant against the expected dimensions.
    pub fn validate(&self, nodes: usize, rank: usize, aux: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::invalid(format!("model state: {msg}")));
        if self.eta.len() != nodes || self.xi.len() != nodes {
            return fail(format!("expected {nodes} nodes"));
        }
        if self.lambda.len() != rank || self.pi.len() != rank {
            return fail(format!("expected rank {rank}"));
        }
        if self.gamma_y.len() != aux || self.gamma_z.len() != aux {
            return fail(format!("expected {aux} auxiliary coefficients"));
        }
        if self.l.nrows() != rank + 1 || self.l.ncols() != rank + 1 {
            return fail("slab covariance has wrong dimension".into());
        }
        let scalars = [self.mu_y, self.mu_z, self.tau_y2, self.tau_z2, self.delta];
        if scalars.iter().any(|x| !x.is_finite())
            || self.gamma_y.iter().chain(self.gamma_z.iter()).any(|x| !x.is_finite())
        {
            return fail("non-finite scalar parameter".into());
        }
        if !(self.tau_y2 > 0.0 && self.tau_z2 > 0.0) {
            return fail("variances must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("Δ = {} outside (0, 1)", self.delta));
        }
        if self.l.iter().any(|x| !x.is_finite())
            || (&self.l - self.l.transpose()).amax() > 1e-9 * self.l.amax().max(1.0)
            || self.l.clone().cholesky().is_none()
        {
            return fail("L is not symmetric positive definite".into());
        }
        if self.lambda.iter().any(|l| !LAMBDA_VALUES.contains(l)) {
            return fail("λ outside {-1, 0, 1}".into());
        }
        for (r, p) in self.pi.iter().enumerate() {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (sum - 1.0).abs() > 1e-12 {
                return fail(format!("π_{} is not on the simplex: {:?}", r + 1, p));
            }
        }
        for (v, (x, &e)) in self.xi.iter().zip(&self.eta).enumerate() {
            if x.len() != rank + 1 {
                return fail(format!("ξ_{} has wrong length", v + 1));
            }
            if x.iter().any(|a| !a.is_finite()) {
                return fail(format!("ξ_{} is not finite", v + 1));
            }
            if !e && x.iter().any(|&a| a != 0.0) {
                return fail(format!("η_{} = 0 but ξ_{} is nonzero", v + 1, v + 1));
            }
        }
        if self.zeta.is_nan() || self.zeta <= 0.0 {
            return fail(format!("ζ = {} is not positive", self.zeta));
        }
        Ok(())
    }
}
