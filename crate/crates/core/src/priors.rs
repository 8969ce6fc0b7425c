//! Priors over the mixture parameterisation: uniform atoms, truncated
//! stick-breaking or symmetric Dirichlet weights, half-Cauchy and Cauchy
//! hyperpriors on the two slopes, and an optional prior on the support.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mixture::{MixtureLogDensity, Support};

/// `ceil(C * n^{1/5} * ln n)`, never below one.
pub fn truncation_level(n: usize, c: f64) -> usize {
    let n = n.max(2) as f64;
    ((c * n.powf(0.2) * n.ln()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truncation {
    /// A fixed number of atoms.
    Level(usize),
    /// `truncation_level(n, scale)` for the sample size at hand.
    Scaled { scale: f64 },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Scaled { scale: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightModel {
    StickBreaking,
    /// Symmetric Dirichlet with every coordinate `alpha / N`.
    DirichletMultinomial { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SupportMode {
    Fixed { lower: f64, upper: f64 },
    /// `[X_(1), X_(n)]` from the data.
    Empirical,
    /// `a ~ Cauchy(0, 1)`, `b - a ~ Cauchy_+(0, 1)`.
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub truncation: Truncation,
    /// Total mass of the base measure, which is uniform on `[0, b - a]`.
    pub total_mass: f64,
    pub weight_model: WeightModel,
    pub gamma1_scale: f64,
    pub gamma2_scale: f64,
    pub support: SupportMode,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            truncation: Truncation::default(),
            total_mass: 1.0,
            weight_model: WeightModel::StickBreaking,
            gamma1_scale: 1.0,
            gamma2_scale: 1.0,
            support: SupportMode::Empirical,
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        match self.truncation {
            Truncation::Level(0) => return Err(Error::invalid("truncation", "N must be at least 1")),
            Truncation::Scaled { scale } if !(scale > 0.0 && scale.is_finite()) => {
                return Err(Error::invalid("truncation", format!("scale {scale} must be > 0")))
            }
            _ => {}
        }
        if !(self.total_mass > 0.0 && self.total_mass.is_finite()) {
            return Err(Error::invalid("total_mass", "must be > 0"));
        }
        if let WeightModel::DirichletMultinomial { alpha } = self.weight_model {
            if !(alpha > 0.0 && alpha <= self.total_mass) {
                return Err(Error::invalid(
                    "weight_model",
                    format!("Dirichlet alpha {alpha} must lie in (0, total_mass]"),
                ));
            }
        }
        if !(self.gamma1_scale > 0.0 && self.gamma2_scale > 0.0)
            || !(self.gamma1_scale.is_finite() && self.gamma2_scale.is_finite())
        {
            return Err(Error::invalid("hyperprior", "Cauchy scales must be > 0"));
        }
        if let SupportMode::Fixed { lower, upper } = self.support {
            Support::new(lower, upper)?;
        }
        Ok(())
    }

    pub fn atoms(&self, n: usize) -> usize {
        match self.truncation {
            Truncation::Level(k) => k,
            Truncation::Scaled { scale } => truncation_level(n, scale),
        }
    }

    pub fn is_stick_breaking(&self) -> bool {
        matches!(self.weight_model, WeightModel::StickBreaking)
    }
}

/// Raw prior parameters. `sticks` holds `V_1..V_{N-1}` under stick-breaking
/// and is empty under the Dirichlet model; `weights` is always the implied
/// probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub lower: f64,
    pub upper: f64,
    pub thetas: Vec<f64>,
    pub sticks: Vec<f64>,
    pub weights: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl Params {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn to_mixture(&self) -> Result<MixtureLogDensity> {
        MixtureLogDensity::new(
            Support::new(self.lower, self.upper)?,
            self.thetas.clone(),
            self.weights.clone(),
            self.gamma1,
            self.gamma2,
        )
    }
}

/// `p_i = V_i prod_{j<i} (1 - V_j)` for `i < N`, with the last weight taking
/// the remaining stick.
pub fn stick_weights(sticks: &[f64]) -> Vec<f64> {
    let mut weights = Vec::with_capacity(sticks.len() + 1);
    let mut rest = 1.0;
    for &v in sticks {
        weights.push(rest * v);
        rest *= 1.0 - v;
    }
    weights.push(rest);
    weights
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

fn ln_half_cauchy(x: f64, scale: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    (2.0 / (PI * scale)).ln() - (x / scale).powi(2).ln_1p()
}

fn ln_cauchy(x: f64, scale: f64) -> f64 {
    -(PI * scale).ln() - (x / scale).powi(2).ln_1p()
}

/// Log prior density of the support endpoints under the hierarchical mode.
pub fn ln_support_prior(lower: f64, upper: f64) -> f64 {
    if !(upper > lower) {
        return f64::NEG_INFINITY;
    }
    ln_cauchy(lower, 1.0) + ln_half_cauchy(upper - lower, 1.0)
}

/// Joint log prior density of `params`; `-inf` outside the parameter domain.
pub fn log_prior(cfg: &PriorConfig, params: &Params) -> f64 {
    let width = params.width();
    if !(width > 0.0 && width.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let n_atoms = params.thetas.len();
    if n_atoms == 0 || params.weights.len() != n_atoms {
        return f64::NEG_INFINITY;
    }
    if params.thetas.iter().any(|&t| !(t > 0.0 && t <= width)) {
        return f64::NEG_INFINITY;
    }
    let mut lp = -(n_atoms as f64) * width.ln();

    match cfg.weight_model {
        WeightModel::StickBreaking => {
            if params.sticks.len() + 1 != n_atoms {
                return f64::NEG_INFINITY;
            }
            let h = cfg.total_mass;
            for &v in &params.sticks {
                if !(v > 0.0 && v < 1.0) {
                    return f64::NEG_INFINITY;
                }
                lp += h.ln() + (h - 1.0) * (-v).ln_1p();
            }
        }
        WeightModel::DirichletMultinomial { alpha } => {
            let total: f64 = params.weights.iter().sum();
            if params.weights.iter().any(|&p| !(p > 0.0)) || (total - 1.0).abs() > 1e-9 {
                return f64::NEG_INFINITY;
            }
            let a = alpha / n_atoms as f64;
            lp += ln_gamma(alpha) - n_atoms as f64 * ln_gamma(a);
            lp += params.weights.iter().map(|p| (a - 1.0) * p.ln()).sum::<f64>();
        }
    }

    if !params.gamma2.is_finite() || !params.gamma1.is_finite() {
        return f64::NEG_INFINITY;
    }
    lp += ln_half_cauchy(params.gamma1, cfg.gamma1_scale);
    lp += ln_cauchy(params.gamma2, cfg.gamma2_scale);
    if let SupportMode::Hierarchical = cfg.support {
        lp += ln_support_prior(params.lower, params.upper);
    }
    lp
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draws the support from the prior. Empirical supports depend on the data
/// and cannot be drawn here.
pub fn draw_support<R: Rng + ?Sized>(cfg: &PriorConfig, rng: &mut R) -> Result<Support> {
    match cfg.support {
        SupportMode::Fixed { lower, upper } => Support::new(lower, upper),
        SupportMode::Empirical => Err(Error::Config(
            "an empirical support needs data; use a fixed or hierarchical support to draw from the prior".into(),
        )),
        SupportMode::Hierarchical => {
            let lower: f64 = Cauchy::new(0.0, 1.0).unwrap().sample(rng);
            let width = loop {
                let w: f64 = Cauchy::new(0.0, 1.0).unwrap().sample(rng);
                let w = w.abs();
                if w > 0.0 && (lower + w) > lower {
                    break w;
                }
            };
            Support::new(lower, lower + width)
        }
    }
}

/// Draws `(theta, weights, gamma1, gamma2)` from the prior with `n_atoms`
/// atoms on the given support.
pub fn draw_params<R: Rng + ?Sized>(
    cfg: &PriorConfig,
    support: Support,
    n_atoms: usize,
    rng: &mut R,
) -> Params {
    let n_atoms = n_atoms.max(1);
    let width = support.width();
    let thetas = draw_thetas(width, n_atoms, rng);
    let (sticks, weights) = draw_weights(cfg, n_atoms, rng);
    let gamma1: f64 = Cauchy::new(0.0, cfg.gamma1_scale).unwrap().sample(rng);
    let gamma1 = gamma1.abs();
    let gamma2 = Cauchy::new(0.0, cfg.gamma2_scale).unwrap().sample(rng);
    Params {
        lower: support.lower,
        upper: support.upper,
        thetas,
        sticks,
        weights,
        gamma1,
        gamma2,
    }
}

pub(crate) fn draw_thetas<R: Rng + ?Sized>(width: f64, n_atoms: usize, rng: &mut R) -> Vec<f64> {
    // 1 - u lies in (0, 1], so each atom lands in (0, width].
    (0..n_atoms)
        .map(|_| width * (1.0 - rng.random::<f64>()))
        .collect()
}

pub(crate) fn draw_weights<R: Rng + ?Sized>(
    cfg: &PriorConfig,
    n_atoms: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    match cfg.weight_model {
        WeightModel::StickBreaking => {
            let h = cfg.total_mass;
            let sticks: Vec<f64> = (0..n_atoms - 1)
                .map(|_| loop {
                    // Beta(1, H) by inversion.
                    let v = 1.0 - open_unit(rng).powf(1.0 / h);
                    if v > 0.0 && v < 1.0 {
                        break v;
                    }
                })
                .collect();
            let weights = stick_weights(&sticks);
            (sticks, weights)
        }
        WeightModel::DirichletMultinomial { alpha } => {
            let a = alpha / n_atoms as f64;
            // Gamma(a) = Gamma(a + 1) * U^{1/a}, taken on the log scale so
            // that small shapes do not underflow.
            let g = Gamma::new(a + 1.0, 1.0).unwrap();
            let logs: Vec<f64> = (0..n_atoms)
                .map(|_| g.sample(rng).ln() + open_unit(rng).ln() / a)
                .collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // Floor at e^-700 relative to the largest so every weight stays positive.
            let raw: Vec<f64> = logs.iter().map(|l| (l - top).max(-700.0).exp()).collect();
            let total: f64 = raw.iter().sum();
            (Vec::new(), raw.into_iter().map(|x| x / total).collect())
        }
    }
}

/// One prior draw as a mixture log-density, with the support drawn from
/// the support prior when it is not fixed.
pub fn draw_prior<R: Rng + ?Sized>(cfg: &PriorConfig, n_atoms: usize, rng: &mut R) -> Result<MixtureLogDensity> {
    let support = draw_support(cfg, rng)?;
    draw_params(cfg, support, n_atoms, rng).to_mixture()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn figure_config() -> PriorConfig {
        PriorConfig {
            support: SupportMode::Fixed { lower: 0.0, upper: 1.0 },
            ..PriorConfig::default()
        }
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_level(1500, 1.0), 32);
        assert_eq!(truncation_level(2, 1.0), 1);
        assert_eq!(truncation_level(50, 1.0), 9);
    }

    #[test]
    fn single_stick() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = draw_prior(&figure_config(), 1, &mut rng).unwrap();
        assert_eq!(m.weights(), &[1.0]);
    }

    #[test]
    fn reference_point() {
        let cfg = figure_config();
        let n = 5;
        let sticks = vec![0.5; n - 1];
        let params = Params {
            lower: 0.0,
            upper: 1.0,
            thetas: vec![0.5; n],
            weights: stick_weights(&sticks),
            sticks,
            gamma1: 0.0,
            gamma2: 0.0,
        };
        let expect = (2.0 / PI).ln() + (1.0 / PI).ln();
        assert!((log_prior(&cfg, &params) - expect).abs() < 1e-14);
        let mut bad = params.clone();
        bad.gamma1 = -0.5;
        assert_eq!(log_prior(&cfg, &bad), f64::NEG_INFINITY);
        let mut bad = params;
        bad.thetas[0] = 1.5;
        assert_eq!(log_prior(&cfg, &bad), f64::NEG_INFINITY);
    }

    #[test]
    fn dirichlet_exchangeable() {
        let cfg = PriorConfig {
            weight_model: WeightModel::DirichletMultinomial { alpha: 1.0 },
            ..figure_config()
        };
        let mut params = Params {
            lower: 0.0,
            upper: 1.0,
            thetas: vec![0.2, 0.4, 0.9],
            sticks: vec![],
            weights: vec![0.2, 0.3, 0.5],
            gamma1: 1.0,
            gamma2: 0.3,
        };
        let before = log_prior(&cfg, &params);
        params.weights.reverse();
        assert_eq!(before, log_prior(&cfg, &params));
    }

    #[test]
    fn draws_are_reproducible() {
        let cfg = figure_config();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..5).map(|_| draw_prior(&cfg, 8, &mut rng).unwrap()).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in &a {
            assert_eq!(m, &draw_prior(&cfg, 8, &mut rng).unwrap());
            assert!(m.to_plf().is_concave());
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = PriorConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.weight_model = WeightModel::DirichletMultinomial { alpha: 2.0 };
        assert!(cfg.validate().is_err());
        let cfg: PriorConfig = serde_json::from_str(
            r#"{"truncation": 12, "weight_model": {"model": "dirichlet_multinomial", "alpha": 0.5},
                "support": {"mode": "fixed", "lower": 0, "upper": 2}}"#,
        )
        .unwrap();
        assert_eq!(cfg.atoms(1000), 12);
        assert!(serde_json::from_str::<PriorConfig>(r#"{"truncaton": 3}"#).is_err());
    }
}
