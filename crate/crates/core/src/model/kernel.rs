use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::data::{distance, Point3};
use crate::error::{Error, Result};

/// Largest jitter tried before giving up on a factorization.
pub const MAX_JITTER: f64 = 1e-4;

/// Exponential correlation matrix `Σ(u,v) = exp(-ζ ‖s_u - s_v‖)` with its
/// Cholesky factor, log-determinant and inverse cached.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    sigma: DMatrix<f64>,
    cholesky: Cholesky<f64, Dyn>,
    logdet: f64,
    precision: DMatrix<f64>,
    precision_ones: DVector<f64>,
    ones_precision_ones: f64,
    zeta: f64,
    jitter: f64,
}

impl KernelMatrix {
    /// Builds the kernel at decay `zeta`, adding `jitter` to the diagonal and
    /// escalating it ×10 (up to [`MAX_JITTER`]) if the factorization fails.
    pub fn exponential(coords: &[Point3], zeta: f64, jitter: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(Error::invalid(format!("kernel decay ζ must be positive, got {zeta}")));
        }
        let v_count = coords.len();
        let base = DMatrix::from_fn(v_count, v_count, |u, v| {
            if u == v {
                1.0
            } else {
                (-zeta * distance(&coords[u], &coords[v])).exp()
            }
        });
        let mut current = jitter.max(0.0);
        loop {
            let mut sigma = base.clone();
            for k in 0..v_count {
                sigma[(k, k)] += current;
            }
            if let Some(kernel) = Self::from_matrix(sigma, zeta, current) {
                return Ok(kernel);
            }
            current = if current == 0.0 { 1e-8 } else { current * 10.0 };
            if current > MAX_JITTER * (1.0 + 1e-9) {
                let eig = base.clone().symmetric_eigenvalues();
                let (lo, hi) =
                    eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e.abs()), hi.max(e.abs())));
                return Err(Error::numerical(format!(
                    "kernel at ζ = {zeta} is not positive definite even with jitter {MAX_JITTER} \
                     (condition estimate {:.3e})",
                    hi / lo
                )));
            }
        }
    }

    /// `Σ = I`, used by the non-spatial variants.
    pub fn identity(v_count: usize) -> Self {
        Self::from_matrix(DMatrix::identity(v_count, v_count), f64::INFINITY, 0.0)
            .expect("identity is positive definite")
    }

    fn from_matrix(sigma: DMatrix<f64>, zeta: f64, jitter: f64) -> Option<Self> {
        let cholesky = sigma.clone().cholesky()?;
        let lower = cholesky.l();
        if lower.diagonal().iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return None;
        }
        let logdet = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let mut precision = cholesky.inverse();
        precision = (&precision + precision.transpose()) * 0.5;
        let precision_ones = precision.column_sum();
        let ones_precision_ones = precision_ones.sum();
        Some(KernelMatrix { sigma, cholesky, logdet, precision, precision_ones, ones_precision_ones, zeta, jitter })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Lower-triangular Cholesky factor.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.cholesky.l()
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `Σ⁻¹`.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `Σ⁻¹ 1`.
    pub fn precision_ones(&self) -> &DVector<f64> {
        &self.precision_ones
    }

    /// `1ᵀ Σ⁻¹ 1`.
    pub fn ones_precision_ones(&self) -> f64 {
        self.ones_precision_ones
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Jitter actually added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `Σ⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.cholesky.solve(b)
    }

    /// `bᵀ Σ⁻¹ b`, through the triangular factor.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        let lower = self.cholesky.l_dirty();
        let mut y = b.clone();
        lower.solve_lower_triangular_mut(&mut y).then_some(()).expect("Cholesky factor has a positive diagonal");
        y.norm_squared()
    }
}

/// Kernels for every ζ grid point, built once per dataset.
#[derive(Debug, Clone)]
pub struct KernelSet {
    kernels: Vec<KernelMatrix>,
}

impl KernelSet {
    pub fn exponential_grid(coords: &[Point3], grid: &[f64], jitter: f64) -> Result<Self> {
        let kernels = grid.iter().map(|&z| KernelMatrix::exponential(coords, z, jitter)).collect::<Result<Vec<_>>>()?;
        Ok(KernelSet { kernels })
    }

    /// Single identity kernel.
    pub fn identity(v_count: usize) -> Self {
        KernelSet { kernels: vec![KernelMatrix::identity(v_count)] }
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn get(&self, index: usize) -> &KernelMatrix {
        &self.kernels[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &KernelMatrix> {
        self.kernels.iter()
    }
}
