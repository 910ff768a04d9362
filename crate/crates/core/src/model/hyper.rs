use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default diagonal jitter added to kernel matrices.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Fixed prior constants and sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// Latent rank `R` of the network coefficient.
    pub rank: usize,
    /// Exponent `ξ > 1` in the `Dirichlet(r^ξ, 1, 1)` prior on `π_r`.
    pub dirichlet_exponent: f64,
    /// Inverse-gamma shape `a` shared by `τ_y²` and `τ_z²`.
    pub ig_shape: f64,
    /// Inverse-gamma rate `b` shared by `τ_y²` and `τ_z²`.
    pub ig_rate: f64,
    /// Inverse-Wishart degrees of freedom `ν` for the slab covariance `L`.
    pub iw_df: f64,
    /// Inverse-Wishart scale `Σ_L`, `(R+1) × (R+1)`.
    pub iw_scale: DMatrix<f64>,
    /// Beta prior on the inclusion probability `Δ`.
    pub delta_a: f64,
    pub delta_b: f64,
    /// Support of the discrete uniform prior on the kernel decay `ζ`.
    pub zeta_grid: Vec<f64>,
    /// Total sweeps, including burn-in.
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Variance of an optional `N(0, s²)` prior on `μ_y, μ_z, γ_y, γ_z`.
    /// `None` is the flat prior.
    pub coefficient_prior_variance: Option<f64>,
    /// Initial kernel jitter; escalated ×10 up to `1e-4` on factorization failure.
    pub kernel_jitter: f64,
}

impl Hyperparameters {
    /// Defaults for latent rank `rank`.
    pub fn with_rank(rank: usize) -> Self {
        Hyperparameters {
            rank,
            dirichlet_exponent: 2.0,
            ig_shape: 2.0,
            ig_rate: 1.0,
            iw_df: rank as f64 + 2.0,
            iw_scale: DMatrix::identity(rank + 1, rank + 1),
            delta_a: 1.0,
            delta_b: 1.0,
            zeta_grid: linspace(0.01, 1.0, 20),
            iterations: 500,
            burnin: 200,
            seed: 0,
            coefficient_prior_variance: None,
            kernel_jitter: DEFAULT_JITTER,
        }
    }

    /// Dimension `R + 1` of each slab vector `ξ_v`.
    pub fn slab_dim(&self) -> usize {
        self.rank + 1
    }

    /// Number of stored post-burn-in draws.
    pub fn kept_draws(&self) -> usize {
        self.iterations.saturating_sub(self.burnin)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be a positive finite number, got {x}")))
            }
        };
        if self.rank == 0 {
            return Err(Error::invalid("latent rank must be at least 1"));
        }
        if !(self.dirichlet_exponent.is_finite() && self.dirichlet_exponent > 1.0) {
            return Err(Error::invalid(format!("Dirichlet exponent must exceed 1, got {}", self.dirichlet_exponent)));
        }
        positive("inverse-gamma shape", self.ig_shape)?;
        positive("inverse-gamma rate", self.ig_rate)?;
        positive("Beta prior a", self.delta_a)?;
        positive("Beta prior b", self.delta_b)?;
        if !(self.iw_df.is_finite() && self.iw_df > self.rank as f64) {
            return Err(Error::invalid(format!(
                "inverse-Wishart degrees of freedom must exceed the rank {}, got {}",
                self.rank, self.iw_df
            )));
        }
        let d = self.slab_dim();
        if self.iw_scale.nrows() != d || self.iw_scale.ncols() != d {
            return Err(Error::invalid(format!(
                "inverse-Wishart scale must be {d}x{d}, got {}x{}",
                self.iw_scale.nrows(),
                self.iw_scale.ncols()
            )));
        }
        if (&self.iw_scale - self.iw_scale.transpose()).amax() > 1e-12 * self.iw_scale.amax().max(1.0)
            || self.iw_scale.iter().any(|x| !x.is_finite())
            || self.iw_scale.clone().cholesky().is_none()
        {
            return Err(Error::invalid("inverse-Wishart scale must be symmetric positive definite"));
        }
        if self.zeta_grid.is_empty() {
            return Err(Error::invalid("zeta grid is empty"));
        }
        for (k, &z) in self.zeta_grid.iter().enumerate() {
            positive("zeta grid value", z)?;
            if k > 0 && z <= self.zeta_grid[k - 1] {
                return Err(Error::invalid(format!(
                    "zeta grid must be strictly increasing (duplicate or descending value {z} at position {})",
                    k + 1
                )));
            }
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        if self.burnin >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burnin, self.iterations
            )));
        }
        if let Some(s2) = self.coefficient_prior_variance {
            positive("coefficient prior variance", s2)?;
        }
        if !(self.kernel_jitter.is_finite() && self.kernel_jitter >= 0.0) {
            return Err(Error::invalid("kernel jitter must be non-negative"));
        }
        Ok(())
    }

    /// Index of the grid median (lower median for even grid sizes).
    pub fn median_zeta_index(&self) -> usize {
        (self.zeta_grid.len() - 1) / 2
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::with_rank(4)
    }
}

/// `count` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}
