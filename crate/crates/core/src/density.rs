//! Normalised piecewise log-linear densities.
//!
//! On a segment `[x_j, x_j + d]` with log-density `w_j + s t` the mass is
//! `e^{w_j} (e^{s d} - 1) / s`. All masses are computed relative to the maximum
//! log-density value, so nothing overflows, and segments with `|s d|` below
//! [`SMALL_SLOPE`] use the series `d e^{w_j} (1 + s d / 2)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::plf::PiecewiseLinearFn;

/// Threshold on `|s * d|` below which the series branch is used.
pub const SMALL_SLOPE: f64 = 1e-8;

/// Anything that can be evaluated pointwise as a probability density.
pub trait Density {
    fn pdf(&self, x: f64) -> f64;
    /// Interval outside which the density is zero (or negligible).
    fn support(&self) -> (f64, f64);
    /// Points where the density is not smooth; quadrature splits there.
    fn singular_points(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Mass of `exp(w - shift)` over one linear segment from value `w0` to `w1`
/// across a width `dx`.
#[inline]
pub(crate) fn segment_mass(w0: f64, w1: f64, dx: f64, shift: f64) -> f64 {
    let d = w1 - w0;
    if d.abs() < SMALL_SLOPE {
        dx * (w0 - shift).exp() * (1.0 + 0.5 * d)
    } else if d > 0.0 {
        dx * (w1 - shift).exp() * (-(-d).exp_m1()) / d
    } else {
        dx * (w0 - shift).exp() * d.exp_m1() / d
    }
}

/// `log` of the integral of `exp(w)` over the support of `w`.
pub fn log_norm_const(w: &PiecewiseLinearFn) -> f64 {
    let shift = w.max_value();
    let x = w.breakpoints();
    let v = w.values();
    let total: f64 = (0..w.segments())
        .map(|j| segment_mass(v[j], v[j + 1], x[j + 1] - x[j], shift))
        .sum();
    shift + total.ln()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct NormalizedDensity {
    logdensity: PiecewiseLinearFn,
    log_norm: f64,
    shift: f64,
    /// Mass before each segment, relative to `shift`; length `segments + 1`.
    cumulative: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    logdensity: PiecewiseLinearFn,
    log_norm: f64,
}

impl TryFrom<RawDensity> for NormalizedDensity {
    type Error = crate::error::Error;
    fn try_from(raw: RawDensity) -> Result<Self> {
        // The stored constant is informational; it is always recomputed.
        Ok(NormalizedDensity::new(raw.logdensity))
    }
}

impl From<NormalizedDensity> for RawDensity {
    fn from(d: NormalizedDensity) -> Self {
        RawDensity {
            log_norm: d.log_norm,
            logdensity: d.logdensity,
        }
    }
}

impl NormalizedDensity {
    pub fn new(logdensity: PiecewiseLinearFn) -> Self {
        let shift = logdensity.max_value();
        let x = logdensity.breakpoints();
        let v = logdensity.values();
        let mut cumulative = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for j in 0..logdensity.segments() {
            acc += segment_mass(v[j], v[j + 1], x[j + 1] - x[j], shift);
            cumulative.push(acc);
        }
        let log_norm = shift + acc.ln();
        Self {
            logdensity,
            log_norm,
            shift,
            cumulative,
        }
    }

    /// Uniform density on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Ok(Self::new(PiecewiseLinearFn::constant(a, b, 0.0)?))
    }

    pub fn logdensity(&self) -> &PiecewiseLinearFn {
        &self.logdensity
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// The normalised log-density `w - log_norm` as a piecewise-linear function.
    pub fn normalized_log(&self) -> PiecewiseLinearFn {
        self.logdensity.shifted(-self.log_norm)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.logdensity.eval(x) - self.log_norm
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.logdensity.segment_of(x) {
            None => 0.0,
            Some(j) => (self.logdensity.eval_in(j, x) - self.log_norm).exp(),
        }
    }

    /// Density values at an ascending slice of points.
    pub fn eval_sorted(&self, xs: &[f64]) -> Vec<f64> {
        self.logdensity
            .eval_sorted(xs)
            .into_iter()
            .map(|w| (w - self.log_norm).exp())
            .collect()
    }

    fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.logdensity.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let j = self.logdensity.segment_of(x).unwrap();
        let bx = self.logdensity.breakpoints();
        let w0 = self.logdensity.values()[j];
        let wx = self.logdensity.eval_in(j, x);
        let partial = segment_mass(w0, wx, x - bx[j], self.shift);
        ((self.cumulative[j] + partial) / self.total()).clamp(0.0, 1.0)
    }

    /// Inverse CDF, solved in closed form on the selected segment.
    pub fn quantile(&self, u: f64) -> f64 {
        let (lo, hi) = self.logdensity.support();
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        let target = u * self.total();
        let segs = self.logdensity.segments();
        let j = (self.cumulative.partition_point(|&c| c <= target) - 1).min(segs - 1);
        let x = self.logdensity.breakpoints();
        let v = self.logdensity.values();
        let dx = x[j + 1] - x[j];
        let mass = self.cumulative[j + 1] - self.cumulative[j];
        let r = (target - self.cumulative[j]).clamp(0.0, mass);
        let t = invert_segment(v[j], v[j + 1], dx, self.shift, r, mass);
        (x[j] + t).clamp(x[j], x[j + 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.quantile(rng.random::<f64>())).collect()
    }

    pub fn mean(&self) -> f64 {
        // Mean of a piecewise log-linear density via per-segment quadrature of x f(x).
        let x = self.logdensity.breakpoints();
        let mut acc = 0.0;
        for j in 0..self.logdensity.segments() {
            let (a, b) = (x[j], x[j + 1]);
            let f = |t: f64| t * self.eval(t);
            acc += crate::quadrature::integrate(&f, a, b, 4, 1e-13).unwrap_or(f64::NAN);
        }
        acc
    }
}

/// Offset `t` into a segment at which the accumulated (shifted) mass equals
/// `r`. Positive slopes are inverted from the right end so the exponential is
/// always evaluated at the segment's larger value.
fn invert_segment(w0: f64, w1: f64, dx: f64, shift: f64, r: f64, mass: f64) -> f64 {
    let d = w1 - w0;
    let s = d / dx;
    if d.abs() < SMALL_SLOPE {
        let c = (w0 - shift).exp();
        if c == 0.0 {
            return if mass > 0.0 { dx * r / mass } else { 0.0 };
        }
        let t0 = r / c;
        return t0 * (1.0 - 0.5 * s * t0);
    }
    if d < 0.0 {
        let c = (w0 - shift).exp();
        if c == 0.0 {
            return if mass > 0.0 { dx * r / mass } else { 0.0 };
        }
        let z = (r * s / c).max(-1.0);
        (z.ln_1p() / s).clamp(0.0, dx)
    } else {
        let c = (w1 - shift).exp();
        if c == 0.0 {
            return if mass > 0.0 { dx * r / mass } else { 0.0 };
        }
        let rest = (mass - r).max(0.0);
        let z = (-rest * s / c).max(-1.0);
        let u = -z.ln_1p() / s;
        (dx - u).clamp(0.0, dx)
    }
}

impl Density for NormalizedDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn support(&self) -> (f64, f64) {
        self.logdensity.support()
    }
    fn singular_points(&self) -> Vec<f64> {
        self.logdensity.breakpoints().to_vec()
    }
}

/// A density given by values on an equally spaced grid, linearly
/// interpolated and zero outside the grid. Used for posterior-mean curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(crate::error::Error::invalid(
                "grid",
                format!("{} grid points for {} values", grid.len(), values.len()),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(crate::error::Error::invalid("grid", "grid must be increasing"));
        }
        Ok(Self { grid, values })
    }
}

impl Density for GridDensity {
    fn pdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] || x > *g.last().unwrap() {
            return 0.0;
        }
        let k = g.partition_point(|&p| p <= x).clamp(1, g.len() - 1);
        let t = (x - g[k - 1]) / (g[k] - g[k - 1]);
        (self.values[k - 1] + t * (self.values[k] - self.values[k - 1])).max(0.0)
    }
    fn support(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }
    fn singular_points(&self) -> Vec<f64> {
        self.grid.clone()
    }
}
