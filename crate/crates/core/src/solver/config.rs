use serde::{Deserialize, Serialize};

use crate::error::{DrsaError, Result};
use crate::operators::{default_rho, default_sigma, OperatorVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Latent dimension.
    pub k: usize,
    /// Subspace rank of the low-rank operator variants.
    pub rho: usize,
    /// Structural residual penalty; also the ridge weight on `H` in the
    /// structure-driven stage.
    pub beta: f64,
    /// Ridge weight on the feature projection `P`.
    pub gamma: f64,
    /// Number of outer iterations.
    pub max_iters: usize,
    /// Standard deviation of the random operator factors.
    pub sigma: f64,
    pub seed: u64,
    pub variant: OperatorVariant,
    /// Early stop on relative objective change below this value; 0 disables.
    pub rel_tol: f64,
    /// `H` is initialized with std `init_scale / sqrt(k)`.
    pub init_scale: f64,
}

impl SolverConfig {
    /// Configuration with latent dimension `k` and the derived defaults
    /// `rho = max(2, k / 4)` and `sigma = 1 / sqrt(rho)`.
    pub fn with_k(k: usize) -> Self {
        let rho = default_rho(k);
        Self {
            k,
            rho,
            beta: 1.0,
            gamma: 1.0,
            max_iters: 30,
            sigma: default_sigma(rho),
            seed: 0,
            variant: OperatorVariant::TypeDual,
            rel_tol: 0.0,
            init_scale: 1.0,
        }
    }

    /// Sets `rho` and resets `sigma` to its default for that rank.
    pub fn with_rho(mut self, rho: usize) -> Self {
        self.rho = rho;
        self.sigma = default_sigma(rho);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DrsaError::InvalidConfig(msg));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.rho == 0 || self.rho > self.k {
            return bad(format!(
                "rho must satisfy 1 <= rho <= k (rho = {}, k = {})",
                self.rho, self.k
            ));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return bad(format!("beta must be finite and > 0 (got {})", self.beta));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!(
                "gamma must be finite and >= 0 (got {})",
                self.gamma
            ));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be finite and > 0 (got {})", self.sigma));
        }
        if !(self.rel_tol.is_finite() && self.rel_tol >= 0.0) {
            return bad(format!(
                "rel_tol must be finite and >= 0 (got {})",
                self.rel_tol
            ));
        }
        // zero scale is a valid degenerate start
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad(format!(
                "init_scale must be finite and >= 0 (got {})",
                self.init_scale
            ));
        }
        Ok(())
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::with_k(16)
    }
}
