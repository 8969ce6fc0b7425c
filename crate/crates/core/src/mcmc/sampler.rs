use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::density::log_norm_const;
use crate::error::{Error, Result};
use crate::mixture::{MixtureLogDensity, Support};
use crate::priors::{self, log_prior, stick_weights, Params, PriorConfig, SupportMode};

/// Initial random-walk scales. Scales for `theta` and the support endpoints
/// are multiplied by the current support width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    pub theta: f64,
    /// Logit-scale step for sticks, or log-ratio step for Dirichlet weights.
    pub weights: f64,
    /// Log-scale step for gamma1.
    pub gamma1: f64,
    pub gamma2: f64,
    pub support: f64,
    pub adapt: bool,
    pub target_acceptance: f64,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            theta: 0.05,
            weights: 0.5,
            gamma1: 0.3,
            gamma2: 0.3,
            support: 0.02,
            adapt: true,
            target_acceptance: 0.30,
        }
    }
}

impl ProposalConfig {
    pub fn zero() -> Self {
        Self {
            theta: 0.0,
            weights: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            support: 0.0,
            adapt: false,
            target_acceptance: 0.30,
        }
    }
}

/// Blocks that are updated; frozen blocks keep their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockMask {
    pub theta: bool,
    pub weights: bool,
    pub gamma1: bool,
    pub gamma2: bool,
    pub support: bool,
}

impl Default for BlockMask {
    fn default() -> Self {
        Self {
            theta: true,
            weights: true,
            gamma1: true,
            gamma2: true,
            support: true,
        }
    }
}

/// Robbins-Monro step exponent for the log proposal scales.
pub const ADAPT_EXPONENT: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Theta,
    Weights,
    Gamma1,
    Gamma2,
    Lower,
    Upper,
}

pub const BLOCKS: [Block; 6] = [
    Block::Theta,
    Block::Weights,
    Block::Gamma1,
    Block::Gamma2,
    Block::Lower,
    Block::Upper,
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BlockCount {
    pub proposed: u64,
    pub accepted: u64,
}

impl BlockCount {
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Sorted observations with prefix sums, so that
/// `sum_j min(t, X_j - a)` costs one binary search.
#[derive(Debug, Clone)]
pub(crate) struct DataSummary {
    xs: Vec<f64>,
    prefix: Vec<f64>,
}

impl DataSummary {
    pub(crate) fn new(data: &[f64]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data("no observations".into()));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::Data(format!("observation {x} is not finite")));
        }
        let mut xs = data.to_vec();
        xs.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(xs.len() + 1);
        prefix.push(0.0);
        for &x in &xs {
            prefix.push(prefix.last().unwrap() + x);
        }
        Ok(Self { xs, prefix })
    }

    pub(crate) fn len(&self) -> usize {
        self.xs.len()
    }
    pub(crate) fn min(&self) -> f64 {
        self.xs[0]
    }
    pub(crate) fn max(&self) -> f64 {
        *self.xs.last().unwrap()
    }
    pub(crate) fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// `sum_j min(t, X_j - lower) / t`.
    fn ramp(&self, lower: f64, t: f64) -> f64 {
        let cut = lower + t;
        let k = self.xs.partition_point(|&x| x < cut);
        let n = self.xs.len();
        (self.prefix[k] - k as f64 * lower + (n - k) as f64 * t) / t
    }

    fn centred_total(&self, lower: f64) -> f64 {
        self.prefix[self.xs.len()] - self.xs.len() as f64 * lower
    }
}

/// Parameters plus cached log-normaliser, log-likelihood and log-prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub params: Params,
    #[serde(skip)]
    ramps: Vec<f64>,
    pub log_norm: f64,
    pub log_likelihood: f64,
    pub log_prior: f64,
}

impl ChainState {
    pub fn log_posterior(&self) -> f64 {
        self.log_likelihood + self.log_prior
    }

    pub fn mixture(&self) -> Result<MixtureLogDensity> {
        self.params.to_mixture()
    }
}

fn eval_params(prior: &PriorConfig, data: &DataSummary, params: Params, ramps: Vec<f64>) -> ChainState {
    let lp = log_prior(prior, &params);
    let mut state = ChainState {
        params,
        ramps,
        log_norm: f64::NAN,
        log_likelihood: f64::NEG_INFINITY,
        log_prior: lp,
    };
    if lp == f64::NEG_INFINITY {
        return state;
    }
    let p = &state.params;
    if data.min() < p.lower || data.max() > p.upper {
        return state;
    }
    let mixture = match p.to_mixture() {
        Ok(m) => m,
        Err(_) => {
            state.log_prior = f64::NEG_INFINITY;
            return state;
        }
    };
    let log_norm = log_norm_const(&mixture.to_plf());
    let ramp: f64 = state.ramps.iter().zip(&p.weights).map(|(r, w)| r * w).sum();
    let data_term = p.gamma1 * ramp - p.gamma2 * data.centred_total(p.lower);
    state.log_norm = log_norm;
    state.log_likelihood = data_term - data.len() as f64 * log_norm;
    if !state.log_likelihood.is_finite() {
        state.log_likelihood = f64::NEG_INFINITY;
    }
    state
}

fn all_ramps(data: &DataSummary, params: &Params) -> Vec<f64> {
    params.thetas.iter().map(|&t| data.ramp(params.lower, t)).collect()
}

/// Reflects `x` into `[lo, hi]`.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * w);
    if y > w {
        y = 2.0 * w - y;
    }
    lo + y
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

/// Metropolis-Hastings within Gibbs sampler over one dataset.
#[derive(Debug, Clone)]
pub struct Sampler {
    prior: PriorConfig,
    proposal: ProposalConfig,
    blocks: BlockMask,
    data: DataSummary,
    state: ChainState,
    log_scales: Vec<f64>,
    counts: [BlockCount; 6],
}

impl Sampler {
    /// Starts from explicit parameters, which must have finite posterior.
    pub fn new(
        prior: PriorConfig,
        proposal: ProposalConfig,
        blocks: BlockMask,
        data: &[f64],
        init: Params,
    ) -> Result<Self> {
        let data = DataSummary::new(data)?;
        let n_atoms = init.thetas.len();
        let ramps = all_ramps(&data, &init);
        let state = eval_params(&prior, &data, init, ramps);
        if !state.log_posterior().is_finite() {
            return Err(Error::Data(
                "initial state has zero posterior density (data outside the support?)".into(),
            ));
        }
        let mut log_scales = vec![proposal.theta.ln(); n_atoms];
        log_scales.extend(std::iter::repeat_n(proposal.weights.ln(), n_atoms - 1));
        log_scales.push(proposal.gamma1.ln());
        log_scales.push(proposal.gamma2.ln());
        log_scales.push(proposal.support.ln());
        log_scales.push(proposal.support.ln());
        Ok(Self {
            prior,
            proposal,
            blocks,
            data,
            state,
            log_scales,
            counts: Default::default(),
        })
    }

    /// Draws atoms and weights from the prior on `support`, with
    /// `gamma1 = 1` and `gamma2 = 0`.
    pub fn from_prior<R: Rng + ?Sized>(
        prior: PriorConfig,
        proposal: ProposalConfig,
        blocks: BlockMask,
        data: &[f64],
        support: Support,
        n_atoms: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut init = priors::draw_params(&prior, support, n_atoms, rng);
        init.gamma1 = 1.0;
        init.gamma2 = 0.0;
        Self::new(prior, proposal, blocks, data, init)
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn counts(&self) -> [BlockCount; 6] {
        self.counts
    }

    pub fn reset_counts(&mut self) {
        self.counts = Default::default();
    }

    pub fn scales(&self) -> Vec<f64> {
        self.log_scales.iter().map(|l| l.exp()).collect()
    }

    fn n_atoms(&self) -> usize {
        self.state.params.thetas.len()
    }

    /// One full sweep. `adapt_step` is the iteration index while proposal
    /// scales are still being adapted, and `None` once they are frozen.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt_step: Option<usize>) {
        let n_atoms = self.n_atoms();
        let adapt = adapt_step.filter(|_| self.proposal.adapt);
        if self.blocks.theta {
            for i in 0..n_atoms {
                self.update_theta(i, rng, adapt);
            }
        }
        if self.blocks.weights && n_atoms > 1 {
            for i in 0..n_atoms - 1 {
                if self.prior.is_stick_breaking() {
                    self.update_stick(i, rng, adapt);
                } else {
                    self.update_log_ratio(i, rng, adapt);
                }
            }
        }
        if self.blocks.gamma1 {
            self.update_gamma1(rng, adapt);
        }
        if self.blocks.gamma2 {
            self.update_gamma2(rng, adapt);
        }
        if self.blocks.support && matches!(self.prior.support, SupportMode::Hierarchical) {
            self.update_lower(rng, adapt);
            self.update_upper(rng, adapt);
        }
    }

    fn step<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.log_scales[k].exp() * z
    }

    /// Accept/reject `proposal` given the log proposal correction `log_jac`.
    fn decide<R: Rng + ?Sized>(
        &mut self,
        block: Block,
        k: usize,
        proposal: ChainState,
        log_jac: f64,
        rng: &mut R,
        adapt: Option<usize>,
    ) {
        let log_ratio = proposal.log_posterior() - self.state.log_posterior() + log_jac;
        let u: f64 = rng.random();
        let accept = !log_ratio.is_nan() && u.ln() < log_ratio;
        let count = &mut self.counts[block as usize];
        count.proposed += 1;
        if accept {
            count.accepted += 1;
            self.state = proposal;
        }
        if let Some(t) = adapt {
            let prob = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
            if self.log_scales[k].is_finite() {
                let gain = (t as f64 + 1.0).powf(-ADAPT_EXPONENT);
                self.log_scales[k] = (self.log_scales[k]
                    + gain * (prob - self.proposal.target_acceptance))
                    .clamp(-25.0, 8.0);
            }
        }
    }

    fn update_theta<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R, adapt: Option<usize>) {
        let width = self.state.params.width();
        let step = self.step(i, rng) * width;
        let mut params = self.state.params.clone();
        params.thetas[i] = reflect(params.thetas[i] + step, 0.0, width);
        let mut ramps = self.state.ramps.clone();
        if params.thetas[i] > 0.0 {
            ramps[i] = self.data.ramp(params.lower, params.thetas[i]);
        }
        let proposal = eval_params(&self.prior, &self.data, params, ramps);
        self.decide(Block::Theta, i, proposal, 0.0, rng, adapt);
    }

    fn update_stick<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R, adapt: Option<usize>) {
        let k = self.n_atoms() + i;
        let v = self.state.params.sticks[i];
        let step = self.step(k, rng);
        let v_new = if step == 0.0 { v } else { sigmoid((v / (1.0 - v)).ln() + step) };
        if !(v_new > 0.0 && v_new < 1.0) {
            self.counts[Block::Weights as usize].proposed += 1;
            return;
        }
        let mut params = self.state.params.clone();
        params.sticks[i] = v_new;
        params.weights = stick_weights(&params.sticks);
        let log_jac = (v_new * (1.0 - v_new)).ln() - (v * (1.0 - v)).ln();
        let proposal = eval_params(&self.prior, &self.data, params, self.state.ramps.clone());
        self.decide(Block::Weights, k, proposal, log_jac, rng, adapt);
    }

    fn update_log_ratio<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R, adapt: Option<usize>) {
        let k = self.n_atoms() + i;
        let step = self.step(k, rng);
        let weights = &self.state.params.weights;
        if step == 0.0 {
            let proposal = self.state.clone();
            self.decide(Block::Weights, k, proposal, 0.0, rng, adapt);
            return;
        }
        let last = weights[weights.len() - 1].ln();
        let mut psi: Vec<f64> = weights.iter().map(|p| p.ln() - last).collect();
        psi[i] += step;
        let top = psi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = psi.iter().map(|x| (x - top).exp()).sum();
        let new_weights: Vec<f64> = psi.iter().map(|x| (x - top).exp() / total).collect();
        let log_jac = new_weights.iter().map(|p| p.ln()).sum::<f64>()
            - weights.iter().map(|p| p.ln()).sum::<f64>();
        let mut params = self.state.params.clone();
        params.weights = new_weights;
        let proposal = eval_params(&self.prior, &self.data, params, self.state.ramps.clone());
        self.decide(Block::Weights, k, proposal, log_jac, rng, adapt);
    }

    fn update_gamma1<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt: Option<usize>) {
        let k = 2 * self.n_atoms() - 1;
        let g = self.state.params.gamma1;
        let g_new = g * self.step(k, rng).exp();
        let mut params = self.state.params.clone();
        params.gamma1 = g_new;
        let log_jac = if g_new == g { 0.0 } else { g_new.ln() - g.ln() };
        let proposal = eval_params(&self.prior, &self.data, params, self.state.ramps.clone());
        self.decide(Block::Gamma1, k, proposal, log_jac, rng, adapt);
    }

    fn update_gamma2<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt: Option<usize>) {
        let k = 2 * self.n_atoms();
        let mut params = self.state.params.clone();
        params.gamma2 += self.step(k, rng);
        let proposal = eval_params(&self.prior, &self.data, params, self.state.ramps.clone());
        self.decide(Block::Gamma2, k, proposal, 0.0, rng, adapt);
    }

    fn update_lower<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt: Option<usize>) {
        let k = 2 * self.n_atoms() + 1;
        let mut params = self.state.params.clone();
        let x_min = self.data.min();
        let mut a = params.lower + self.step(k, rng) * params.width();
        if a > x_min {
            a = 2.0 * x_min - a;
        }
        params.lower = a;
        let ramps = all_ramps(&self.data, &params);
        let proposal = eval_params(&self.prior, &self.data, params, ramps);
        self.decide(Block::Lower, k, proposal, 0.0, rng, adapt);
    }

    fn update_upper<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt: Option<usize>) {
        let k = 2 * self.n_atoms() + 2;
        let mut params = self.state.params.clone();
        let x_max = self.data.max();
        let mut b = params.upper + self.step(k, rng) * params.width();
        if b < x_max {
            b = 2.0 * x_max - b;
        }
        params.upper = b;
        let proposal = eval_params(&self.prior, &self.data, params, self.state.ramps.clone());
        self.decide(Block::Upper, k, proposal, 0.0, rng, adapt);
    }

    /// Largest relative discrepancy between the cached log-normaliser,
    /// log-likelihood and log-prior and a recomputation from scratch.
    pub fn audit(&self) -> Result<f64> {
        let m = self.state.mixture()?;
        let log_norm = log_norm_const(&m.to_plf());
        let loglik = super::log_likelihood(&m, self.data.xs());
        let lp = log_prior(&self.prior, &self.state.params);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
        Ok(rel(self.state.log_norm, log_norm)
            .max(rel(self.state.log_likelihood, loglik))
            .max(rel(self.state.log_prior, lp)))
    }
}
