//! Adaptive Simpson integration used for Hellinger distances and interval
//! averages of concave functions.

use crate::error::{Error, Result};

/// Default panel count for composite rules over a whole support.
pub const DEFAULT_PANELS: usize = 4096;
/// Default absolute tolerance for adaptive refinement.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

const MAX_DEPTH: u32 = 40;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite integrand near x = {lm} or x = {rm}"
        )));
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (m - a) <= f64::EPSILON * m.abs().max(1.0) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(&f, a, b, 1, tol)
}

/// Composite Simpson over `panels` equal panels, each refined adaptively so the
/// total error estimate stays below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!("integration bounds [{a}, {b}] not finite")));
    }
    if b <= a {
        return Ok(0.0);
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    // Endpoints are evaluated as one-sided limits so that a jump exactly at
    // `a` or `b` does not leak into this piece.
    let mut x0 = a;
    let mut f0 = f(a.next_up());
    for k in 0..panels {
        let x1 = if k + 1 == panels { b } else { a + (k + 1) as f64 * h };
        let xm = 0.5 * (x0 + x1);
        let fm = f(xm);
        let f1 = if k + 1 == panels { f(b.next_down()) } else { f(x1) };
        if !(f0.is_finite() && fm.is_finite() && f1.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite integrand on panel [{x0}, {x1}]"
            )));
        }
        let whole = simpson(f0, fm, f1, x1 - x0);
        total += refine(f, x0, x1, f0, fm, f1, whole, panel_tol, MAX_DEPTH)?;
        x0 = x1;
        f0 = f1;
    }
    Ok(total)
}

/// Integrates over `[a, b]` after splitting at `breaks`, so that each piece is
/// smooth. Panels are shared out in proportion to piece length.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breaks: &[f64],
    panels: usize,
    tol: f64,
) -> Result<f64> {
    let cuts = split_points(a, b, breaks);
    let width = b - a;
    let pieces = cuts.len() - 1;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let share = ((w[1] - w[0]) / width * panels as f64).ceil() as usize;
        total += integrate(f, w[0], w[1], share.max(1), tol / pieces as f64)?;
    }
    Ok(total)
}

/// Sorted, deduplicated cut points `a = c_0 < ... < c_k = b` including every
/// break strictly inside `(a, b)`.
pub(crate) fn split_points(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
    }

    #[test]
    fn exponential() {
        let v = integrate(&|x: f64| x.exp(), 0.0, 1.0, 8, 1e-13).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn kink_handled_by_split() {
        let f = |x: f64| (x - 0.3).abs();
        let v = integrate_piecewise(&f, 0.0, 1.0, &[0.3], 4, 1e-14).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn non_finite_is_error() {
        assert!(matches!(
            adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-8),
            Err(Error::Numeric(_))
        ));
    }
}
