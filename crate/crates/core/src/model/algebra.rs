//! Deterministic model algebra: coefficient reconstruction and residuals.

use nalgebra::{DMatrix, DVector};

use super::data::{pair_count, pairs, Dataset};
use super::state::ModelState;
use crate::error::{Error, Result};

fn check_latent(lambda: &[i8], xi: &[DVector<f64>]) -> Result<()> {
    let r = lambda.len();
    if let Some((v, x)) = xi.iter().enumerate().find(|(_, x)| x.len() != r + 1) {
        return Err(Error::invalid(format!("ξ_{} has length {}, expected R+1 = {}", v + 1, x.len(), r + 1)));
    }
    Ok(())
}

/// `B(u,v) = Σ_r λ_r θ_r(u) θ_r(v)` for `u ≠ v`, zero diagonal.
pub fn beta_from_latent(lambda: &[i8], xi: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    check_latent(lambda, xi)?;
    let v_count = xi.len();
    let mut b = DMatrix::zeros(v_count, v_count);
    for u in 0..v_count {
        for v in u + 1..v_count {
            let value = bilinear(lambda, &xi[u], &xi[v]);
            b[(u, v)] = value;
            b[(v, u)] = value;
        }
    }
    Ok(b)
}

/// Vectorized upper triangle of [`beta_from_latent`].
pub fn beta_vector(lambda: &[i8], xi: &[DVector<f64>]) -> Result<DVector<f64>> {
    check_latent(lambda, xi)?;
    let v_count = xi.len();
    Ok(DVector::from_iterator(pair_count(v_count), pairs(v_count).map(|(u, v)| bilinear(lambda, &xi[u], &xi[v]))))
}

#[inline]
fn bilinear(lambda: &[i8], a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    lambda.iter().enumerate().filter(|(_, &l)| l != 0).map(|(r, &l)| l as f64 * a[r + 1] * b[r + 1]).sum()
}

/// Vectorized rank-1 layer `θ_r(u) θ_r(v)` for 0-based component `r`.
pub fn latent_layer(xi: &[DVector<f64>], r: usize) -> DVector<f64> {
    let v_count = xi.len();
    DVector::from_iterator(pair_count(v_count), pairs(v_count).map(|(u, v)| xi[u][r + 1] * xi[v][r + 1]))
}

fn check_dims(data: &Dataset, state: &ModelState) -> Result<()> {
    if state.nodes() != data.nodes() {
        return Err(Error::invalid(format!("state has {} nodes, data has {}", state.nodes(), data.nodes())));
    }
    if state.gamma_y.len() != data.aux_count() || state.gamma_z.len() != data.aux_count() {
        return Err(Error::invalid("auxiliary coefficient count does not match data"));
    }
    Ok(())
}

/// `ỹ_i = y_i − 1 μ_y − β̃ x_i − 1 w_iᵀ γ_y` for every subject.
pub fn network_residuals(data: &Dataset, state: &ModelState) -> Result<Vec<DVector<f64>>> {
    check_dims(data, state)?;
    let beta = beta_vector(&state.lambda, &state.xi)?;
    let aux = data.aux_effects(state.gamma_y.as_view());
    Ok((0..data.subjects())
        .map(|i| {
            let shift = state.mu_y + aux[i];
            let x = data.predictor()[i];
            DVector::from_iterator(beta.len(), data.edges(i).iter().zip(beta.iter()).map(|(y, b)| y - shift - b * x))
        })
        .collect())
}

/// `z̃_i = z_i − 1 μ_z − α̃ x_i − 1 w_iᵀ γ_z` for every subject.
pub fn attribute_residuals(data: &Dataset, state: &ModelState) -> Result<Vec<DVector<f64>>> {
    check_dims(data, state)?;
    let alpha = state.alpha_vector();
    let aux = data.aux_effects(state.gamma_z.as_view());
    Ok((0..data.subjects())
        .map(|i| {
            let shift = state.mu_z + aux[i];
            let x = data.predictor()[i];
            DVector::from_iterator(
                alpha.len(),
                data.attributes(i).iter().zip(alpha.iter()).map(|(z, a)| z - shift - a * x),
            )
        })
        .collect())
}
