//! Midpoint interpolation: the piecewise-linear function through the points
//! `(x_i*, average of w over [x_{i-1}, x_i])`, `x_i*` the cell midpoints,
//! extended linearly to both ends of the partition. For concave `w` the result
//! is concave.

use super::{LogConcave, Partition};
use crate::error::{Error, Result};
use crate::plf::PiecewiseLinearFn;
use crate::quadrature::integrate_piecewise;

/// Relative accuracy of each cell average.
const AVERAGE_TOLERANCE: f64 = 1e-12;

/// Average of `w` over `[u, v]`.
pub(crate) fn cell_average(w: &dyn LogConcave, kinks: &[f64], u: f64, v: f64) -> Result<f64> {
    let f = |x: f64| w.log_value(x);
    let scale = f(0.5 * (u + v)).abs().max(1.0);
    let integral = integrate_piecewise(&f, u, v, kinks, 4, AVERAGE_TOLERANCE * scale * (v - u))?;
    Ok(integral / (v - u))
}

pub fn midpoint_interpolant(w: &dyn LogConcave, partition: &Partition) -> Result<PiecewiseLinearFn> {
    let x = &partition.points;
    if x.len() < 2 {
        return Err(Error::invalid("partition", "need at least one cell"));
    }
    let kinks = w.kinks();
    let (a, b) = partition.interval();
    let mids: Vec<f64> = x.windows(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    let avgs = x
        .windows(2)
        .map(|c| cell_average(w, &kinks, c[0], c[1]))
        .collect::<Result<Vec<f64>>>()?;
    let m = mids.len();
    if m == 1 {
        return PiecewiseLinearFn::constant(a, b, avgs[0]);
    }
    let extrapolate = |t: f64, i: usize, j: usize| {
        avgs[i] + (avgs[j] - avgs[i]) / (mids[j] - mids[i]) * (t - mids[i])
    };
    let mut bp = Vec::with_capacity(m + 2);
    let mut vals = Vec::with_capacity(m + 2);
    bp.push(a);
    vals.push(extrapolate(a, 0, 1));
    bp.extend_from_slice(&mids);
    vals.extend_from_slice(&avgs);
    bp.push(b);
    vals.push(extrapolate(b, m - 2, m - 1));
    PiecewiseLinearFn::new(bp, vals)
}
