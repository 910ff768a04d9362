use serde::{Deserialize, Serialize};

/// How the attribute row of the node-level slab update is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttributeConditioning {
    /// Condition `z_i(s_v)` on the other nodes' attribute residuals through
    /// the kernel precision (kriging residual, variance `τ_z² / (Σ⁻¹)_vv`).
    Whitened,
    /// Use `z_i(s_v) − μ_z − γ_zᵀ w_i` with variance `τ_z²`, ignoring the
    /// spatial correlation with the other nodes. Exact only when `Σ = I`.
    Verbatim,
}

/// Which likelihood blocks a fit uses and how the spatial effect enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub network: bool,
    pub attributes: bool,
    /// Exponential kernel over the ζ grid; `false` forces `Σ = I`.
    pub spatial: bool,
    pub conditioning: AttributeConditioning,
}

impl SamplerConfig {
    pub const fn spatial_joint() -> Self {
        SamplerConfig { network: true, attributes: true, spatial: true, conditioning: AttributeConditioning::Whitened }
    }

    pub const fn non_spatial_joint() -> Self {
        SamplerConfig { spatial: false, ..Self::spatial_joint() }
    }

    pub const fn network_only() -> Self {
        SamplerConfig { attributes: false, spatial: false, ..Self::spatial_joint() }
    }

    pub const fn attribute_only() -> Self {
        SamplerConfig { network: false, spatial: false, ..Self::spatial_joint() }
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::spatial_joint()
    }
}
