//! Synthetic truth families used to generate data and to score estimates.
//!
//! Samplers come from `rand_distr`: Gaussian draws use the ziggurat method,
//! Gamma draws use Marsaglia and Tsang's squeeze method, Beta draws use Cheng's
//! BB/BC algorithms. Laplace draws use the inverse CDF.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    Gaussian { mean: f64, sd: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
    Laplace { loc: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
    Mixture2 {
        weight: f64,
        first: Box<TruthSpec>,
        second: Box<TruthSpec>,
    },
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

impl TruthSpec {
    pub fn standard_gaussian() -> Self {
        TruthSpec::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::invalid("truth", what.to_string()));
        match *self {
            TruthSpec::Gaussian { mean, sd } => {
                if !(mean.is_finite() && sd > 0.0 && sd.is_finite()) {
                    return bad("gaussian needs finite mean and sd > 0");
                }
            }
            TruthSpec::Gamma { shape, rate } => {
                if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
                    return bad("gamma needs shape > 0 and rate > 0");
                }
            }
            TruthSpec::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return bad("beta needs a > 0 and b > 0");
                }
            }
            TruthSpec::Laplace { loc, scale } => {
                if !(loc.is_finite() && scale > 0.0 && scale.is_finite()) {
                    return bad("laplace needs finite loc and scale > 0");
                }
            }
            TruthSpec::Uniform { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return bad("uniform needs lower < upper");
                }
            }
            TruthSpec::Mixture2 {
                weight,
                ref first,
                ref second,
            } => {
                if !(0.0..=1.0).contains(&weight) {
                    return bad("mixture weight must lie in [0, 1]");
                }
                first.validate()?;
                second.validate()?;
            }
        }
        Ok(())
    }

    /// Whether the family is log-concave for these parameters. Gamma needs
    /// shape >= 1, Beta needs both parameters >= 1; mixtures are never
    /// flagged.
    pub fn is_log_concave(&self) -> bool {
        match *self {
            TruthSpec::Gaussian { .. } | TruthSpec::Laplace { .. } | TruthSpec::Uniform { .. } => true,
            TruthSpec::Gamma { shape, .. } => shape >= 1.0,
            TruthSpec::Beta { a, b } => a >= 1.0 && b >= 1.0,
            TruthSpec::Mixture2 { .. } => false,
        }
    }

    /// Exact support (possibly unbounded).
    pub fn exact_support(&self) -> (f64, f64) {
        match self {
            TruthSpec::Gaussian { .. } | TruthSpec::Laplace { .. } => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            TruthSpec::Gamma { .. } => (0.0, f64::INFINITY),
            TruthSpec::Beta { .. } => (0.0, 1.0),
            TruthSpec::Uniform { lower, upper } => (*lower, *upper),
            TruthSpec::Mixture2 { first, second, .. } => {
                let (a, b) = first.exact_support();
                let (c, d) = second.exact_support();
                (a.min(c), b.max(d))
            }
        }
    }

    /// A compact interval carrying all but a negligible (< 1e-100) amount of mass.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            TruthSpec::Gaussian { mean, sd } => (mean - 22.0 * sd, mean + 22.0 * sd),
            TruthSpec::Laplace { loc, scale } => (loc - 240.0 * scale, loc + 240.0 * scale),
            TruthSpec::Gamma { shape, rate } => (0.0, (shape + 30.0 * shape.sqrt() + 240.0) / rate),
            TruthSpec::Beta { .. } => (0.0, 1.0),
            TruthSpec::Uniform { lower, upper } => (lower, upper),
            TruthSpec::Mixture2 {
                ref first,
                ref second,
                ..
            } => {
                let (a, b) = first.effective_support();
                let (c, d) = second.effective_support();
                (a.min(c), b.max(d))
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            TruthSpec::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            TruthSpec::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    f64::NEG_INFINITY
                } else if x == 0.0 && shape == 1.0 {
                    rate.ln()
                } else {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
                }
            }
            TruthSpec::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                let ln_beta = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                let left = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                let right = if b == 1.0 { 0.0 } else { (b - 1.0) * (1.0 - x).ln() };
                left + right - ln_beta
            }
            TruthSpec::Laplace { loc, scale } => -(x - loc).abs() / scale - (2.0 * scale).ln(),
            TruthSpec::Uniform { lower, upper } => {
                if x >= lower && x <= upper {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            TruthSpec::Mixture2 { .. } => self.pdf(x).ln(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            TruthSpec::Mixture2 {
                weight,
                first,
                second,
            } => weight * first.pdf(x) + (1.0 - weight) * second.pdf(x),
            _ => self.ln_pdf(x).exp(),
        }
    }

    /// Right derivative of the log-density; `+inf` left of the support and
    /// `-inf` at or right of its upper end.
    pub fn dlog_right(&self, x: f64) -> f64 {
        let (lo, hi) = self.exact_support();
        if x < lo {
            return f64::INFINITY;
        }
        if x >= hi {
            return f64::NEG_INFINITY;
        }
        match *self {
            TruthSpec::Laplace { loc, scale } => {
                if x < loc {
                    1.0 / scale
                } else {
                    -1.0 / scale
                }
            }
            _ => self.dlog_smooth(x),
        }
    }

    /// Left derivative of the log-density; `+inf` at or left of the lower end
    /// of the support and `-inf` right of it.
    pub fn dlog_left(&self, x: f64) -> f64 {
        let (lo, hi) = self.exact_support();
        if x <= lo {
            return f64::INFINITY;
        }
        if x > hi {
            return f64::NEG_INFINITY;
        }
        match *self {
            TruthSpec::Laplace { loc, scale } => {
                if x <= loc {
                    1.0 / scale
                } else {
                    -1.0 / scale
                }
            }
            _ => self.dlog_smooth(x),
        }
    }

    fn dlog_smooth(&self, x: f64) -> f64 {
        match *self {
            TruthSpec::Gaussian { mean, sd } => -(x - mean) / (sd * sd),
            TruthSpec::Gamma { shape, rate } => (shape - 1.0) / x - rate,
            TruthSpec::Beta { a, b } => (a - 1.0) / x - (b - 1.0) / (1.0 - x),
            TruthSpec::Uniform { .. } => 0.0,
            TruthSpec::Laplace { .. } => unreachable!(),
            TruthSpec::Mixture2 { .. } => {
                let h = 1e-6 * (1.0 + x.abs());
                (self.ln_pdf(x + h) - self.ln_pdf(x - h)) / (2.0 * h)
            }
        }
    }

    /// Points where the log-density has a kink (including support endpoints).
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = match *self {
            TruthSpec::Laplace { loc, .. } => vec![loc],
            TruthSpec::Mixture2 {
                ref first,
                ref second,
                ..
            } => {
                let mut v = first.kinks();
                v.extend(second.kinks());
                v
            }
            _ => vec![],
        };
        let (lo, hi) = self.exact_support();
        k.extend([lo, hi].into_iter().filter(|x| x.is_finite()));
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn mode(&self) -> f64 {
        match *self {
            TruthSpec::Gaussian { mean, .. } => mean,
            TruthSpec::Gamma { shape, rate } => ((shape - 1.0) / rate).max(0.0),
            TruthSpec::Beta { a, b } => {
                if a + b > 2.0 {
                    ((a - 1.0) / (a + b - 2.0)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            }
            TruthSpec::Laplace { loc, .. } => loc,
            TruthSpec::Uniform { lower, upper } => 0.5 * (lower + upper),
            TruthSpec::Mixture2 { .. } => {
                let (lo, hi) = self.effective_support();
                let grid = crate::mixture::Support { lower: lo, upper: hi }.grid(20001);
                grid.into_iter()
                    .max_by(|a, b| self.pdf(*a).total_cmp(&self.pdf(*b)))
                    .unwrap()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TruthSpec::Gaussian { mean, .. } => mean,
            TruthSpec::Gamma { shape, rate } => shape / rate,
            TruthSpec::Beta { a, b } => a / (a + b),
            TruthSpec::Laplace { loc, .. } => loc,
            TruthSpec::Uniform { lower, upper } => 0.5 * (lower + upper),
            TruthSpec::Mixture2 {
                weight,
                ref first,
                ref second,
            } => weight * first.mean() + (1.0 - weight) * second.mean(),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            TruthSpec::Gaussian { sd, .. } => sd * sd,
            TruthSpec::Gamma { shape, rate } => shape / (rate * rate),
            TruthSpec::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            TruthSpec::Laplace { scale, .. } => 2.0 * scale * scale,
            TruthSpec::Uniform { lower, upper } => (upper - lower).powi(2) / 12.0,
            TruthSpec::Mixture2 {
                weight,
                ref first,
                ref second,
            } => {
                let m = self.mean();
                let s1 = first.variance() + first.mean().powi(2);
                let s2 = second.variance() + second.mean().powi(2);
                weight * s1 + (1.0 - weight) * s2 - m * m
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            TruthSpec::Gaussian { mean, sd } => Normal::new(mean, sd).unwrap().sample(rng),
            TruthSpec::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate).unwrap().sample(rng),
            TruthSpec::Beta { a, b } => Beta::new(a, b).unwrap().sample(rng),
            TruthSpec::Laplace { loc, scale } => {
                let u: f64 = rng.random::<f64>() - 0.5;
                loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            TruthSpec::Uniform { lower, upper } => lower + (upper - lower) * rng.random::<f64>(),
            TruthSpec::Mixture2 {
                weight,
                ref first,
                ref second,
            } => {
                if rng.random::<f64>() < weight {
                    first.draw(rng)
                } else {
                    second.draw(rng)
                }
            }
        }
    }
}

/// `n` draws from the truth, sorted ascending.
pub fn sample_truth<R: Rng + ?Sized>(spec: &TruthSpec, rng: &mut R, n: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n).map(|_| spec.draw(rng)).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

pub fn eval_truth(spec: &TruthSpec, x: f64) -> f64 {
    spec.pdf(x)
}

impl Density for TruthSpec {
    fn pdf(&self, x: f64) -> f64 {
        TruthSpec::pdf(self, x)
    }
    fn support(&self) -> (f64, f64) {
        self.effective_support()
    }
    fn singular_points(&self) -> Vec<f64> {
        self.kinks()
    }
}
