//! The mixture parameterisation of a concave log-density,
//!
//! ```text
//! W(x) = gamma1 * sum_i p_i * min(theta_i, x - a) / theta_i - gamma2 * (x - a),   x in [a, b].
//! ```
//!
//! Each atom `theta_i` is the offset from `a` at which the ramp
//! `min(theta_i, x - a) / theta_i` saturates, so `W` is piecewise linear with
//! breakpoints at `a + theta_i` and concave for any `gamma1 >= 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plf::PiecewiseLinearFn;

/// Atoms closer than this are merged into a single breakpoint.
pub const KNOT_DEDUP_TOLERANCE: f64 = 1e-12;
/// Allowed deviation of the weight sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// A compact interval `[lower, upper]` with `lower < upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::invalid("support", format!("[{lower}, {upper}] is not finite")));
        }
        if lower >= upper {
            return Err(Error::invalid(
                "support",
                format!("lower end {lower} must be below upper end {upper}"),
            ));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// `count` equally spaced points from `lower` to `upper` inclusive.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        match count {
            0 => vec![],
            1 => vec![0.5 * (self.lower + self.upper)],
            _ => {
                let h = self.width() / (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i + 1 == count {
                            self.upper
                        } else {
                            self.lower + i as f64 * h
                        }
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureLogDensity {
    support: Support,
    knots: Vec<f64>,
    weights: Vec<f64>,
    gamma1: f64,
    gamma2: f64,
}

impl MixtureLogDensity {
    pub fn new(
        support: Support,
        knots: Vec<f64>,
        weights: Vec<f64>,
        gamma1: f64,
        gamma2: f64,
    ) -> Result<Self> {
        let support = Support::new(support.lower, support.upper)?;
        if knots.is_empty() {
            return Err(Error::invalid("knots", "at least one atom is required"));
        }
        if knots.len() != weights.len() {
            return Err(Error::invalid(
                "weights",
                format!("{} knots but {} weights", knots.len(), weights.len()),
            ));
        }
        let width = support.width();
        if let Some((i, t)) = knots
            .iter()
            .enumerate()
            .find(|(_, &t)| !(t > 0.0 && t <= width))
        {
            return Err(Error::invalid(
                "knots",
                format!("knot {i} = {t} outside (0, {width}]"),
            ));
        }
        if let Some((i, p)) = weights
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p >= 0.0 && p.is_finite()))
        {
            return Err(Error::invalid("weights", format!("weight {i} = {p} is negative")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(
                "weights",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        if !(gamma1 >= 0.0 && gamma1.is_finite()) {
            return Err(Error::invalid("gamma1", format!("gamma1 = {gamma1} must be >= 0")));
        }
        if !gamma2.is_finite() {
            return Err(Error::invalid("gamma2", format!("gamma2 = {gamma2} is not finite")));
        }
        Ok(Self {
            support,
            knots,
            weights,
            gamma1,
            gamma2,
        })
    }

    pub fn support(&self) -> Support {
        self.support
    }
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
    pub fn len(&self) -> usize {
        self.knots.len()
    }
    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Direct evaluation of `W(x)`; `-inf` outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return f64::NEG_INFINITY;
        }
        let t = x - self.support.lower;
        let ramp: f64 = self
            .knots
            .iter()
            .zip(&self.weights)
            .map(|(&th, &p)| th.min(t) / th * p)
            .sum();
        self.gamma1 * ramp - self.gamma2 * t
    }

    pub fn to_plf(&self) -> PiecewiseLinearFn {
        mixture_to_plf(self)
    }
}

/// Builds the piecewise-linear form of `W` with breakpoints at `a`, every
/// distinct `a + theta_i` and `b`.
pub fn mixture_to_plf(m: &MixtureLogDensity) -> PiecewiseLinearFn {
    let a = m.support.lower;
    let width = m.support.width();
    let mut atoms: Vec<(f64, f64)> = m
        .knots
        .iter()
        .copied()
        .zip(m.weights.iter().copied())
        .collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));

    // Offsets of the breakpoints, merged within the dedup tolerance.
    let mut offsets = Vec::with_capacity(atoms.len() + 2);
    offsets.push(0.0);
    for &(t, _) in &atoms {
        let last = *offsets.last().unwrap();
        if t - last > KNOT_DEDUP_TOLERANCE && width - t > KNOT_DEDUP_TOLERANCE {
            offsets.push(t);
        }
    }
    offsets.push(width);

    // Suffix sums of p_i / theta_i over atoms strictly beyond an offset, and
    // prefix sums of p_i over atoms at or before it.
    let mut values = Vec::with_capacity(offsets.len());
    let mut suffix: Vec<f64> = vec![0.0; atoms.len() + 1];
    for i in (0..atoms.len()).rev() {
        suffix[i] = suffix[i + 1] + atoms[i].1 / atoms[i].0;
    }
    let mut k = 0;
    let mut saturated = 0.0;
    for &t in &offsets {
        while k < atoms.len() && atoms[k].0 <= t {
            saturated += atoms[k].1;
            k += 1;
        }
        values.push(m.gamma1 * (saturated + t * suffix[k]) - m.gamma2 * t);
    }
    let mut breakpoints: Vec<f64> = offsets.iter().map(|t| a + t).collect();
    *breakpoints.last_mut().unwrap() = m.support.upper;
    PiecewiseLinearFn::new(breakpoints, values).expect("mixture breakpoints are increasing")
}
