//! Mixture representation of a concave piecewise-linear function on `[a, b]`:
//! `w(x) = g1 sum_i p_i min(t_i, x - a) / t_i - g2 (x - a) + g3`.
//!
//! The left derivative of `w` is a decreasing step function; shifted down by
//! its final value `-g2` it is `g1 sum_{t_i > x - a} p_i / t_i`, so each
//! interior breakpoint `x_i` with slope drop `d_i` contributes an atom at
//! `t_i = x_i - a` with `g1 p_i = d_i t_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{MixtureLogDensity, Support};
use crate::plf::PiecewiseLinearFn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRepresentation {
    pub mixture: MixtureLogDensity,
    /// Additive constant, the value at the left end.
    pub gamma3: f64,
}

pub fn plf_to_mixture(w: &PiecewiseLinearFn) -> Result<MixtureRepresentation> {
    w.ensure_concave()?;
    let (a, b) = w.support();
    let x = w.breakpoints();
    let s = w.slopes();
    let gamma2 = -s[s.len() - 1];
    let mut thetas = Vec::with_capacity(x.len());
    let mut masses = Vec::with_capacity(x.len());
    for k in 1..x.len() - 1 {
        let theta = x[k] - a;
        let drop = (s[k - 1] - s[k]).max(0.0);
        thetas.push(theta);
        masses.push(drop * theta);
    }
    let gamma1: f64 = masses.iter().sum();
    let (thetas, weights) = if gamma1 > 0.0 {
        let weights = masses.iter().map(|m| m / gamma1).collect();
        (thetas, weights)
    } else {
        (vec![b - a], vec![1.0])
    };
    if !gamma1.is_finite() {
        return Err(Error::Numeric("slope drops overflow".into()));
    }
    let mixture = MixtureLogDensity::new(Support::new(a, b)?, thetas, weights, gamma1, gamma2)?;
    Ok(MixtureRepresentation {
        mixture,
        gamma3: w.values()[0],
    })
}
