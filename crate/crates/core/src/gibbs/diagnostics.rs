//! Effective sample size of scalar traces.

use crate::model::{Chain, ModelState};

/// Autocovariance at lags `0..=max_lag`, normalized by `N`.
fn autocovariance(trace: &[f64], max_lag: usize) -> Vec<f64> {
    let n = trace.len();
    let mean = trace.iter().sum::<f64>() / n as f64;
    (0..=max_lag.min(n - 1))
        .map(|lag| (0..n - lag).map(|t| (trace[t] - mean) * (trace[t + lag] - mean)).sum::<f64>() / n as f64)
        .collect()
}

/// Effective sample size by Geyer's initial positive sequence estimator.
///
/// Constant traces return `N`; traces shorter than 4 return their length.
pub fn effective_sample_size(trace: &[f64]) -> f64 {
    let n = trace.len();
    if n < 4 {
        return n as f64;
    }
    let acov = autocovariance(trace, n - 1);
    let var0 = acov[0];
    if var0 <= 0.0 || !var0.is_finite() {
        return n as f64;
    }
    let rho: Vec<f64> = acov.iter().map(|c| c / var0).collect();
    // Pairs Γ_k = ρ_{2k} + ρ_{2k+1} are positive and decreasing for a
    // reversible chain; truncate at the first non-positive pair.
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < rho.len() {
        let gamma = rho[2 * k] + rho[2 * k + 1];
        if gamma <= 0.0 {
            break;
        }
        let gamma = gamma.min(prev);
        sum += gamma;
        prev = gamma;
        k += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / n as f64);
    (n as f64 / tau).min(n as f64 * (n as f64).log10().max(1.0))
}

/// ESS of the scalar parameters `μ_y, μ_z, τ_y², τ_z², Δ` and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EssReport {
    pub per_parameter: Vec<(String, f64)>,
    pub mean: f64,
}

pub fn chain_ess(chain: &Chain) -> EssReport {
    let mut per_parameter = Vec::new();
    type Monitor = (&'static str, fn(&ModelState) -> f64, bool);
    let monitored: [Monitor; 5] = [
        ("mu_y", |s| s.mu_y, chain.config.network),
        ("mu_z", |s| s.mu_z, chain.config.attributes),
        ("tau_y2", |s| s.tau_y2, chain.config.network),
        ("tau_z2", |s| s.tau_z2, chain.config.attributes),
        ("delta", |s| s.delta, true),
    ];
    for (name, f, used) in monitored {
        if used {
            per_parameter.push((name.to_string(), effective_sample_size(&chain.trace(f))));
        }
    }
    let mean = per_parameter.iter().map(|(_, e)| e).sum::<f64>() / per_parameter.len() as f64;
    EssReport { per_parameter, mean }
}
