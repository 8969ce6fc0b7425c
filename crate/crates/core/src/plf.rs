//! Continuous piecewise-linear functions on a compact interval.
//!
//! Every log-density in the crate (prior draws, posterior states, the MLE and
//! the constructive approximation) is stored in this form: sorted breakpoints
//! `x_0 < ... < x_K` with the function values at those points, linear in
//! between and `-inf` outside `[x_0, x_K]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the cross-multiplied slope comparison.
pub const CONCAVITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPlf", into = "RawPlf")]
pub struct PiecewiseLinearFn {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlf {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<RawPlf> for PiecewiseLinearFn {
    type Error = Error;
    fn try_from(raw: RawPlf) -> Result<Self> {
        PiecewiseLinearFn::new(raw.breakpoints, raw.values)
    }
}

impl From<PiecewiseLinearFn> for RawPlf {
    fn from(f: PiecewiseLinearFn) -> Self {
        RawPlf {
            breakpoints: f.breakpoints,
            values: f.values,
        }
    }
}

impl PiecewiseLinearFn {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid(
                "breakpoints",
                format!("need at least 2 breakpoints, got {}", breakpoints.len()),
            ));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!(
                    "{} breakpoints but {} values",
                    breakpoints.len(),
                    values.len()
                ),
            ));
        }
        if let Some(x) = breakpoints.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("breakpoints", format!("non-finite breakpoint {x}")));
        }
        if let Some(i) = breakpoints.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "breakpoints",
                format!(
                    "not strictly increasing at index {}: {} then {}",
                    i,
                    breakpoints[i],
                    breakpoints[i + 1]
                ),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("value {i} is {}", values[i])));
        }
        Ok(Self { breakpoints, values })
    }

    /// Like [`PiecewiseLinearFn::new`] but additionally requires concavity.
    pub fn new_concave(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let f = Self::new(breakpoints, values)?;
        f.ensure_concave()?;
        Ok(f)
    }

    /// The constant function `c` on `[a, b]`.
    pub fn constant(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![c, c])
    }

    /// The affine function `intercept + slope * x` on `[a, b]`.
    pub fn affine(a: f64, b: f64, intercept: f64, slope: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![intercept + slope * a, intercept + slope * b])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, w)| (w[1] - w[0]) / (x[1] - x[0]))
            .collect()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first concavity violation, if any.
    ///
    /// Compares `s_j >= s_{j+1}` in the cross-multiplied form
    /// `(w_{j+1} - w_j) d_{j+1} >= (w_{j+2} - w_{j+1}) d_j` so that short
    /// segments do not amplify rounding error through a division.
    pub fn concavity_violation(&self) -> Option<usize> {
        let x = &self.breakpoints;
        let w = &self.values;
        (0..x.len().saturating_sub(2)).find(|&j| {
            let d0 = x[j + 1] - x[j];
            let d1 = x[j + 2] - x[j + 1];
            let lhs = (w[j + 1] - w[j]) * d1;
            let rhs = (w[j + 2] - w[j + 1]) * d0;
            let scale = (1.0 + w[j].abs() + w[j + 1].abs() + w[j + 2].abs()) * (d0 + d1);
            lhs - rhs < -CONCAVITY_TOLERANCE * scale
        })
    }

    pub fn is_concave(&self) -> bool {
        self.concavity_violation().is_none()
    }

    pub fn ensure_concave(&self) -> Result<()> {
        match self.concavity_violation() {
            None => Ok(()),
            Some(j) => {
                let s = self.slopes();
                Err(Error::invalid(
                    "concavity",
                    format!(
                        "slope increases at breakpoint {} (x = {}): {} then {}",
                        j + 1,
                        self.breakpoints[j + 1],
                        s[j],
                        s[j + 1]
                    ),
                ))
            }
        }
    }

    /// Segment index `j` with `x_j <= x <= x_{j+1}`; `None` outside the support.
    pub fn segment_of(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        Some(k.saturating_sub(1).min(self.segments() - 1))
    }

    /// Value at `x`; `-inf` outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        match self.segment_of(x) {
            None => f64::NEG_INFINITY,
            Some(j) => self.eval_in(j, x),
        }
    }

    #[inline]
    pub(crate) fn eval_in(&self, j: usize, x: f64) -> f64 {
        let (x0, x1) = (self.breakpoints[j], self.breakpoints[j + 1]);
        let (w0, w1) = (self.values[j], self.values[j + 1]);
        let t = (x - x0) / (x1 - x0);
        w0 + t * (w1 - w0)
    }

    /// Evaluates at each point of an ascending slice in a single merge pass.
    pub fn eval_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut j = 0;
        xs.iter()
            .map(|&x| {
                if !(x >= lo && x <= hi) {
                    return f64::NEG_INFINITY;
                }
                while j + 1 < self.segments() && self.breakpoints[j + 1] < x {
                    j += 1;
                }
                self.eval_in(j, x)
            })
            .collect()
    }

    /// Right derivative at `x` (the slope of the segment starting at or
    /// containing `x`). `-inf` at and beyond the right endpoint.
    pub fn right_derivative(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x >= hi {
            return f64::NEG_INFINITY;
        }
        if x < lo {
            return f64::INFINITY;
        }
        let k = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.slope(k)
    }

    /// Left derivative at `x`. `+inf` at and before the left endpoint.
    pub fn left_derivative(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return f64::INFINITY;
        }
        if x > hi {
            return f64::NEG_INFINITY;
        }
        let k = self.breakpoints.partition_point(|&b| b < x) - 1;
        self.slope(k)
    }

    pub fn slope(&self, j: usize) -> f64 {
        (self.values[j + 1] - self.values[j]) / (self.breakpoints[j + 1] - self.breakpoints[j])
    }

    /// Adds a constant to every value.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// Interior breakpoints where the slope actually changes, relative
    /// threshold `tol` on the slope drop.
    pub fn kinks(&self, tol: f64) -> Vec<f64> {
        let s = self.slopes();
        (1..self.breakpoints.len() - 1)
            .filter(|&k| (s[k - 1] - s[k]).abs() > tol * (1.0 + s[k - 1].abs().max(s[k].abs())))
            .map(|k| self.breakpoints[k])
            .collect()
    }
}

/// Location of the maximum of a concave piecewise-linear function.
///
/// The maximum is attained at a breakpoint; when the maximum is attained on a
/// flat run of breakpoints the midpoint of that run is returned.
pub fn mode_of(w: &PiecewiseLinearFn) -> Result<f64> {
    w.ensure_concave()?;
    let max = w.max_value();
    let tol = CONCAVITY_TOLERANCE * (1.0 + max.abs());
    let x = w.breakpoints();
    let v = w.values();
    let first = v.iter().position(|&val| val >= max - tol).unwrap();
    let mut last = first;
    while last + 1 < v.len() && v[last + 1] >= max - tol {
        last += 1;
    }
    Ok(0.5 * (x[first] + x[last]))
}
