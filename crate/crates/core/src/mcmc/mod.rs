//! Random-walk Metropolis-Hastings within Gibbs sampling of the mixture
//! posterior.

mod chain;
mod sampler;

pub use chain::{
    run_chain, run_chain_with, BlockRate, Chain, ChainConfig, ChainMeta, ChainRecord, AUDIT_EVERY,
};
pub use sampler::{Block, BlockCount, BlockMask, ChainState, ProposalConfig, Sampler, ADAPT_EXPONENT};

use crate::density::log_norm_const;
use crate::error::{Error, Result};
use crate::mixture::{MixtureLogDensity, Support};

/// `sum_j W(X_j) - n log int e^W`, or `-inf` when an observation falls
/// outside the support.
pub fn log_likelihood(m: &MixtureLogDensity, data: &[f64]) -> f64 {
    let support = m.support();
    if data.iter().any(|&x| !support.contains(x)) {
        return f64::NEG_INFINITY;
    }
    let log_norm = log_norm_const(&m.to_plf());
    data.iter().map(|&x| m.eval(x)).sum::<f64>() - data.len() as f64 * log_norm
}

/// `[X_(1), X_(n)]`.
pub fn empirical_support(data: &[f64]) -> Result<Support> {
    if data.len() < 2 {
        return Err(Error::Data(format!(
            "an empirical support needs at least 2 observations, got {}",
            data.len()
        )));
    }
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(Error::Data(format!(
            "all observations equal {lo}; the empirical support has zero width"
        )));
    }
    Support::new(lo, hi)
}
