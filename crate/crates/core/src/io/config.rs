use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_version, format_error, read_toml};
use crate::error::{Error, Result};
use crate::harness::ModelVariant;
use crate::model::{AttributeConditioning, Hyperparameters};
use crate::summarize::CurvePooling;

/// Serialized form of [`Hyperparameters`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperFile {
    pub rank: usize,
    pub dirichlet_exponent: f64,
    pub ig_shape: f64,
    pub ig_rate: f64,
    pub iw_df: f64,
    /// Row-major rows of `Σ_L`.
    pub iw_scale: Vec<Vec<f64>>,
    pub delta_a: f64,
    pub delta_b: f64,
    pub zeta_grid: Vec<f64>,
    pub iterations: usize,
    pub burnin: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_prior_variance: Option<f64>,
    pub kernel_jitter: f64,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::invalid("iw_scale must be a square matrix"));
    }
    Ok(DMatrix::from_fn(d, d, |a, b| rows[a][b]))
}

impl From<&Hyperparameters> for HyperFile {
    fn from(h: &Hyperparameters) -> Self {
        HyperFile {
            rank: h.rank,
            dirichlet_exponent: h.dirichlet_exponent,
            ig_shape: h.ig_shape,
            ig_rate: h.ig_rate,
            iw_df: h.iw_df,
            iw_scale: matrix_rows(&h.iw_scale),
            delta_a: h.delta_a,
            delta_b: h.delta_b,
            zeta_grid: h.zeta_grid.clone(),
            iterations: h.iterations,
            burnin: h.burnin,
            seed: h.seed,
            coefficient_prior_variance: h.coefficient_prior_variance,
            kernel_jitter: h.kernel_jitter,
        }
    }
}

impl HyperFile {
    pub fn to_hyper(&self) -> Result<Hyperparameters> {
        let h = Hyperparameters {
            rank: self.rank,
            dirichlet_exponent: self.dirichlet_exponent,
            ig_shape: self.ig_shape,
            ig_rate: self.ig_rate,
            iw_df: self.iw_df,
            iw_scale: rows_matrix(&self.iw_scale)?,
            delta_a: self.delta_a,
            delta_b: self.delta_b,
            zeta_grid: self.zeta_grid.clone(),
            iterations: self.iterations,
            burnin: self.burnin,
            seed: self.seed,
            coefficient_prior_variance: self.coefficient_prior_variance,
            kernel_jitter: self.kernel_jitter,
        };
        h.validate()?;
        Ok(h)
    }
}

/// Partial hyperparameters. A changed `rank` resets `iw_df` and `iw_scale`
/// to that rank's defaults unless they are given too.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOverrides {
    pub rank: Option<usize>,
    pub dirichlet_exponent: Option<f64>,
    pub ig_shape: Option<f64>,
    pub ig_rate: Option<f64>,
    pub iw_df: Option<f64>,
    pub iw_scale: Option<Vec<Vec<f64>>>,
    pub delta_a: Option<f64>,
    pub delta_b: Option<f64>,
    pub zeta_grid: Option<Vec<f64>>,
    pub iterations: Option<usize>,
    pub burnin: Option<usize>,
    pub coefficient_prior_variance: Option<f64>,
    pub kernel_jitter: Option<f64>,
}

impl HyperOverrides {
    /// Applies the overrides on top of `base` and validates the result.
    pub fn apply(&self, base: &Hyperparameters) -> Result<Hyperparameters> {
        let mut h = match self.rank {
            Some(r) if r != base.rank => Hyperparameters {
                seed: base.seed,
                iterations: base.iterations,
                burnin: base.burnin,
                ..Hyperparameters::with_rank(r)
            },
            _ => base.clone(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(x) = &self.$field {
                    h.$field = x.clone();
                }
            )*};
        }
        set!(
            dirichlet_exponent,
            ig_shape,
            ig_rate,
            iw_df,
            delta_a,
            delta_b,
            zeta_grid,
            iterations,
            burnin,
            kernel_jitter
        );
        if let Some(rows) = &self.iw_scale {
            h.iw_scale = rows_matrix(rows)?;
        }
        if self.coefficient_prior_variance.is_some() {
            h.coefficient_prior_variance = self.coefficient_prior_variance;
        }
        h.validate()?;
        Ok(h)
    }
}

/// Optional TOML run configuration shared by every subcommand. Command-line
/// flags take precedence over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub variant: Option<ModelVariant>,
    pub variants: Option<Vec<ModelVariant>>,
    pub replicates: Option<usize>,
    pub level: Option<f64>,
    pub conditioning: Option<AttributeConditioning>,
    pub curve_bins: Option<usize>,
    pub curve_pooling: Option<CurvePooling>,
    pub subjects: Option<usize>,
    pub nodes: Option<usize>,
    #[serde(default)]
    pub hyper: HyperOverrides,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: super::FORMAT_VERSION,
            seed: None,
            threads: None,
            variant: None,
            variants: None,
            replicates: None,
            level: None,
            conditioning: None,
            curve_bins: None,
            curve_pooling: None,
            subjects: None,
            nodes: None,
            hyper: HyperOverrides::default(),
        }
    }
}

impl RunConfig {
    /// Reads and validates a configuration file.
    pub fn read(path: &Path) -> Result<Self> {
        let cfg: RunConfig = read_toml(path)?;
        check_version(path, cfg.format_version)?;
        cfg.validate().map_err(|e| match e {
            Error::InvalidInput(reason) => format_error(path, reason),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.level {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::invalid(format!("level {l} outside (0, 1)")));
            }
        }
        if self.replicates == Some(0) {
            return Err(Error::invalid("replicates must be positive"));
        }
        if self.curve_bins == Some(0) {
            return Err(Error::invalid("curve_bins must be positive"));
        }
        if self.variants.as_ref().is_some_and(|v| v.is_empty()) {
            return Err(Error::invalid("variants must not be empty"));
        }
        self.hyper.apply(&Hyperparameters::with_rank(self.hyper.rank.unwrap_or(1)))?;
        Ok(())
    }
}
