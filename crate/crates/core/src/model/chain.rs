use super::config::SamplerConfig;
use super::hyper::Hyperparameters;
use super::state::ModelState;
use crate::error::{Error, Result};

/// Post-burn-in draws of one sampler run plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub states: Vec<ModelState>,
    pub hyper: Hyperparameters,
    pub config: SamplerConfig,
    pub dataset_fingerprint: String,
    /// RNG stream the chain was drawn from (the seed lives in `hyper`).
    pub stream: u64,
    /// Seconds spent sampling; not part of the persisted draw file.
    pub wall_clock: f64,
}

impl Chain {
    pub fn validate(&self, nodes: usize, aux: usize) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::invalid("chain holds no draws"));
        }
        for (f, s) in self.states.iter().enumerate() {
            s.validate(nodes, self.hyper.rank, aux).map_err(|e| Error::invalid(format!("draw {}: {e}", f + 1)))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.states.first().map_or(0, |s| s.nodes())
    }

    /// Trace of a scalar function of the state.
    pub fn trace(&self, f: impl Fn(&ModelState) -> f64) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }
}
