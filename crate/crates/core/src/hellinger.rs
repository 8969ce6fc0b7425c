//! Hellinger distance `h(p, q) = (int (sqrt p - sqrt q)^2)^{1/2}`, taking
//! values in `[0, sqrt 2]`.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HellingerOptions {
    /// Integration interval; defaults to the union of both supports.
    pub interval: Option<(f64, f64)>,
    pub panels: usize,
    pub tolerance: f64,
}

impl Default for HellingerOptions {
    fn default() -> Self {
        Self {
            interval: None,
            panels: quadrature::DEFAULT_PANELS,
            tolerance: quadrature::DEFAULT_TOLERANCE,
        }
    }
}

/// Squared Hellinger distance, clipped to `[0, 2]`.
pub fn hellinger_sq(f: &dyn Density, g: &dyn Density, opts: &HellingerOptions) -> Result<f64> {
    let (lo, hi) = match opts.interval {
        Some(iv) => iv,
        None => {
            let (fa, fb) = f.support();
            let (ga, gb) = g.support();
            (fa.min(ga), fb.max(gb))
        }
    };
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Numeric(format!(
            "Hellinger interval [{lo}, {hi}] is not a finite interval"
        )));
    }
    let mut breaks = f.singular_points();
    breaks.extend(g.singular_points());
    let (fa, fb) = f.support();
    let (ga, gb) = g.support();
    breaks.extend([fa, fb, ga, gb]);
    let integrand = |x: f64| {
        let p = f.pdf(x);
        let q = g.pdf(x);
        let d = p.sqrt() - q.sqrt();
        d * d
    };
    let h2 = quadrature::integrate_piecewise(&integrand, lo, hi, &breaks, opts.panels, opts.tolerance)?;
    if !h2.is_finite() {
        return Err(Error::Numeric("Hellinger integral is not finite".into()));
    }
    Ok(h2.clamp(0.0, 2.0))
}

pub fn hellinger(f: &dyn Density, g: &dyn Density, opts: &HellingerOptions) -> Result<f64> {
    hellinger_sq(f, g, opts).map(f64::sqrt)
}
