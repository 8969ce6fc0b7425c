use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::{BlockCount, BlockMask, ProposalConfig, Sampler, ADAPT_EXPONENT, BLOCKS};
use super::empirical_support;
use super::sampler::Block;
use crate::density::{GridDensity, NormalizedDensity};
use crate::error::{Error, Result};
use crate::mixture::Support;
use crate::plf::mode_of;
use crate::priors::{Params, PriorConfig, SupportMode};
use crate::seed::{self, Purpose};

/// How often the cached likelihood quantities are recomputed from scratch.
pub const AUDIT_EVERY: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub prior: PriorConfig,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub grid_size: usize,
    /// Evaluation grid interval; defaults to the support, or for the
    /// hierarchical mode the data range widened by a tenth on each side.
    pub grid_interval: Option<(f64, f64)>,
    pub proposal: ProposalConfig,
    pub blocks: BlockMask,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            prior: PriorConfig::default(),
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            grid_size: 512,
            grid_interval: None,
            proposal: ProposalConfig::default(),
            blocks: BlockMask::default(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(
                "burn_in",
                format!("burn_in {} must be below iterations {}", self.burn_in, self.iterations),
            ));
        }
        if self.thin == 0 {
            return Err(Error::invalid("thin", "must be at least 1"));
        }
        if self.grid_size < 2 {
            return Err(Error::invalid("grid_size", "must be at least 2"));
        }
        if let Some((a, b)) = self.grid_interval {
            Support::new(a, b)?;
        }
        Ok(())
    }

    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub iteration: usize,
    pub params: Params,
    pub log_posterior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRate {
    pub block: Block,
    pub proposed: u64,
    pub accepted: u64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub seed: u64,
    pub n: usize,
    pub atoms: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub support_mode: SupportMode,
    /// Acceptance during burn-in, while scales adapt.
    pub burn_in_acceptance: Vec<BlockRate>,
    /// Acceptance of the frozen kernel after burn-in.
    pub acceptance: Vec<BlockRate>,
    pub adaptation: String,
    pub final_scales: Vec<f64>,
    pub max_cache_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub records: Vec<ChainRecord>,
    pub grid: Vec<f64>,
    pub grid_evals: Vec<Vec<f64>>,
    pub meta: ChainMeta,
}

fn rates(counts: &[BlockCount; 6]) -> Vec<BlockRate> {
    BLOCKS
        .iter()
        .zip(counts)
        .filter(|(_, c)| c.proposed > 0)
        .map(|(&block, c)| BlockRate {
            block,
            proposed: c.proposed,
            accepted: c.accepted,
            rate: c.rate(),
        })
        .collect()
}

impl Chain {
    pub fn len(&self) -> usize {
        self.records.len()
    }
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn density(&self, k: usize) -> Result<NormalizedDensity> {
        Ok(NormalizedDensity::new(self.records[k].params.to_mixture()?.to_plf()))
    }

    /// Density of every kept state at `x`.
    pub fn eval_at(&self, x: f64) -> Result<Vec<f64>> {
        (0..self.len()).map(|k| Ok(self.density(k)?.eval(x))).collect()
    }

    pub fn modes(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| mode_of(&r.params.to_mixture()?.to_plf()))
            .collect()
    }

    /// The posterior mean density on the grid, interpolated linearly.
    pub fn posterior_mean(&self) -> Result<GridDensity> {
        if self.is_empty() {
            return Err(Error::Data("chain has no kept states".into()));
        }
        let k = self.len() as f64;
        let mut mean = vec![0.0; self.grid.len()];
        for row in &self.grid_evals {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / k;
            }
        }
        GridDensity::new(self.grid.clone(), mean)
    }
}

/// Runs a chain with the generator `seed::stream(seed, Chain, 0)`.
pub fn run_chain(cfg: &ChainConfig, data: &[f64], seed: u64) -> Result<Chain> {
    let mut rng = seed::stream(seed, Purpose::Chain, 0);
    run_chain_with(cfg, data, &mut rng, seed)
}

/// Runs a chain with a caller-supplied generator; `seed` is only recorded.
pub fn run_chain_with<R: Rng + ?Sized>(
    cfg: &ChainConfig,
    data: &[f64],
    rng: &mut R,
    seed: u64,
) -> Result<Chain> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    let mut xs = data.to_vec();
    xs.sort_by(f64::total_cmp);
    let n_atoms = cfg.prior.atoms(xs.len());
    let (support, grid_support) = match cfg.prior.support {
        SupportMode::Fixed { lower, upper } => {
            let outside: Vec<f64> = xs.iter().copied().filter(|x| *x < lower || *x > upper).collect();
            if !outside.is_empty() {
                let shown: Vec<String> = outside.iter().take(10).map(|x| x.to_string()).collect();
                return Err(Error::Data(format!(
                    "{} observation(s) outside the fixed support [{lower}, {upper}]: {}{}",
                    outside.len(),
                    shown.join(", "),
                    if outside.len() > 10 { ", ..." } else { "" }
                )));
            }
            let s = Support::new(lower, upper)?;
            (s, s)
        }
        SupportMode::Empirical => {
            let s = empirical_support(&xs)?;
            (s, s)
        }
        SupportMode::Hierarchical => {
            let s = empirical_support(&xs)?;
            let pad = 0.01 * s.width();
            let grid_pad = 0.1 * s.width();
            (
                Support::new(s.lower - pad, s.upper + pad)?,
                Support::new(s.lower - grid_pad, s.upper + grid_pad)?,
            )
        }
    };
    let grid_support = match cfg.grid_interval {
        Some((a, b)) => Support::new(a, b)?,
        None => grid_support,
    };
    let grid = grid_support.grid(cfg.grid_size);

    let mut sampler = Sampler::from_prior(cfg.prior, cfg.proposal, cfg.blocks, &xs, support, n_atoms, rng)?;
    let mut records = Vec::with_capacity(cfg.kept());
    let mut grid_evals = Vec::with_capacity(cfg.kept());
    let mut burn_counts = sampler.counts();
    let mut max_cache_error: f64 = 0.0;
    for t in 0..cfg.iterations {
        if t == cfg.burn_in {
            burn_counts = sampler.counts();
            sampler.reset_counts();
        }
        let adapt = (t < cfg.burn_in).then_some(t);
        sampler.sweep(rng, adapt);
        if (t + 1) % AUDIT_EVERY == 0 {
            max_cache_error = max_cache_error.max(sampler.audit()?);
        }
        if t >= cfg.burn_in && (t - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            let state = sampler.state();
            let density = NormalizedDensity::new(state.mixture()?.to_plf());
            grid_evals.push(density.eval_sorted(&grid));
            records.push(ChainRecord {
                iteration: t,
                params: state.params.clone(),
                log_posterior: state.log_posterior(),
            });
        }
    }
    if max_cache_error > 1e-8 {
        return Err(Error::Numeric(format!(
            "cached likelihood drifted from recomputation by {max_cache_error:e}"
        )));
    }
    let meta = ChainMeta {
        seed,
        n: xs.len(),
        atoms: n_atoms,
        iterations: cfg.iterations,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        support_mode: cfg.prior.support,
        burn_in_acceptance: rates(&burn_counts),
        acceptance: rates(&sampler.counts()),
        adaptation: format!(
            "per-coordinate Robbins-Monro on log scale, gain (t+1)^-{ADAPT_EXPONENT}, target {}, enabled {}, frozen after iteration {}",
            cfg.proposal.target_acceptance, cfg.proposal.adapt, cfg.burn_in
        ),
        final_scales: sampler.scales(),
        max_cache_error,
    };
    Ok(Chain {
        records,
        grid,
        grid_evals,
        meta,
    })
}
