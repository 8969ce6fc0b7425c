//! Piecewise log-linear approximation of a log-concave density on `[a_n, b_n]`.
//!
//! With `f0(x) <= exp(-alpha |x| + beta)`, the density is truncated to
//! `[-s_n, s_n]`, `s_n = 4 log n / (5 alpha)`, and renormalised; call its log
//! `w1`. On the core interval `B` where `w1 >= -(4/5) log n` and the slopes
//! are at most `n^{4/5}` in size, `B` is cut into bands of slope magnitude
//! `(2^{-j-1} n^{4/5}, 2^{-j} n^{4/5}]` and a central piece where the slope is
//! small. Each piece receives an adapted partition, the midpoint interpolant
//! of `w1` is taken over their union and extended linearly to `[a_n, b_n]`
//! with the end slopes of `w1` clipped to `+-n^{4/5}`.

use serde::{Deserialize, Serialize};

use super::{midpoint_interpolant, plf_to_mixture, transition, ExpOf, LogConcave, Partition};
use crate::density::{log_norm_const, NormalizedDensity};
use crate::error::{Error, Result};
use crate::hellinger::{hellinger_sq, HellingerOptions};
use crate::plf::PiecewiseLinearFn;
use crate::quadrature::integrate_piecewise;

const FIXTURE: &str = include_str!("../../fixtures/approx_constants.json");

/// Frozen constants of the approximation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConstants {
    /// `C` in `knots <= C n^{1/5} log n`.
    pub knot_count: f64,
    /// `c` in `min gap >= c n^{-6/5} log n`.
    pub knot_gap: f64,
    /// `C` in `h^2 <= C ((log n)^2 n^{-4/5} + (b_n - a_n)^2 n^{-8/5})`.
    pub hellinger: f64,
    /// `C` in `f0 <= C fbar` on `[a_n, b_n]`.
    pub domination: f64,
    /// Smallest sample size accepted.
    pub n0: u64,
    /// Slope level `D` below which the central piece begins.
    pub slope_floor: f64,
}

impl Default for ApproxConstants {
    fn default() -> Self {
        serde_json::from_str(FIXTURE).expect("bundled approximation constants parse")
    }
}

/// Exponential envelope `f0(x) <= exp(-alpha |x| + beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub alpha: f64,
    pub beta: f64,
}

const ENVELOPE_GRID: usize = 20_000;

/// Fits the envelope by grid search over `alpha`, picking the one minimising
/// `e^beta / alpha`, the constant in the tail mass bound
/// `P(|X| > s) <= 2 e^beta e^{-alpha s} / alpha`. Only `alpha` values for
/// which `log f0(x) + alpha |x|` is eventually decreasing on unbounded sides
/// are admissible.
pub fn fit_envelope(f0: &dyn LogConcave) -> Result<Envelope> {
    let (dlo, dhi) = f0.domain();
    let (elo, ehi) = f0.effective_domain();
    let (lo, hi) = (elo.max(dlo), ehi.min(dhi));
    let mut xs: Vec<f64> = (0..=ENVELOPE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / ENVELOPE_GRID as f64)
        .collect();
    xs.extend(f0.kinks().into_iter().filter(|&k| k > lo && k < hi));
    xs.push(0.0_f64.clamp(lo, hi));
    xs.sort_by(f64::total_cmp);
    let lv: Vec<f64> = xs.iter().map(|&x| f0.log_value(x)).collect();
    let tail = |alpha: f64, edge: f64, inner: f64| {
        f0.log_value(edge) + alpha * edge.abs() <= f0.log_value(inner) + alpha * inner.abs() + 1e-9
    };
    let mut best: Option<(f64, Envelope)> = None;
    for i in 1..=500 {
        let alpha = i as f64 / 100.0;
        if dlo.is_infinite() && !tail(alpha, lo, 0.9 * lo + 0.1 * hi) {
            continue;
        }
        if dhi.is_infinite() && !tail(alpha, hi, 0.1 * lo + 0.9 * hi) {
            continue;
        }
        let beta = xs
            .iter()
            .zip(&lv)
            .map(|(x, l)| l + alpha * x.abs())
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let score = beta - alpha.ln();
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, Envelope { alpha, beta }));
        }
    }
    best.map(|(_, e)| e)
        .ok_or_else(|| Error::Data("no exponential envelope with alpha in (0, 5] fits the density".into()))
}

/// `log f0 - shift` restricted to `[lo, hi]`.
struct Truncated<'a> {
    f: &'a dyn LogConcave,
    lo: f64,
    hi: f64,
    shift: f64,
}

impl LogConcave for Truncated<'_> {
    fn log_value(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            f64::NEG_INFINITY
        } else {
            self.f.log_value(x) - self.shift
        }
    }
    fn right_derivative(&self, x: f64) -> f64 {
        if x < self.lo {
            f64::INFINITY
        } else if x >= self.hi {
            f64::NEG_INFINITY
        } else {
            self.f.right_derivative(x)
        }
    }
    fn left_derivative(&self, x: f64) -> f64 {
        if x <= self.lo {
            f64::INFINITY
        } else if x > self.hi {
            f64::NEG_INFINITY
        } else {
            self.f.left_derivative(x)
        }
    }
    fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .f
            .kinks()
            .into_iter()
            .filter(|&k| k > self.lo && k < self.hi)
            .collect();
        k.push(self.lo);
        k.push(self.hi);
        k.sort_by(f64::total_cmp);
        k
    }
    fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxBounds {
    pub knot_count: f64,
    pub knot_gap: f64,
    pub hellinger_sq: f64,
    pub domination: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxChecks {
    pub knot_count: bool,
    pub knot_gap: bool,
    pub support: bool,
    pub domination: bool,
    pub hellinger: bool,
    pub representation: bool,
    pub concave: bool,
}

impl ApproxChecks {
    pub fn all(&self) -> bool {
        self.knot_count
            && self.knot_gap
            && self.support
            && self.domination
            && self.hellinger
            && self.representation
            && self.concave
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub n: u64,
    pub interval: (f64, f64),
    pub envelope: Envelope,
    pub truncation: f64,
    /// The core interval `B`.
    pub core: (f64, f64),
    /// Normalised log-density of the approximation.
    pub plf: PiecewiseLinearFn,
    pub knot_count: usize,
    pub min_knot_gap: f64,
    pub sup_error_on_b: f64,
    pub hellinger_sq: f64,
    /// Largest `f0 / fbar` on the check grid.
    pub max_ratio: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// Knot positions relative to `a_n`.
    pub thetas: Vec<f64>,
    pub weights: Vec<f64>,
    pub round_trip_error: f64,
    pub constants: ApproxConstants,
    pub bounds: ApproxBounds,
    pub checks: ApproxChecks,
}

/// Pieces of `B`: cut points and, per piece, its slope band (`None` for the
/// central piece).
struct Pieces {
    cuts: Vec<f64>,
    bands: Vec<Option<u32>>,
}

impl Pieces {
    fn merge_short(&mut self, min_width: f64) {
        while self.bands.len() > 1 {
            let widths: Vec<f64> = self.cuts.windows(2).map(|c| c[1] - c[0]).collect();
            let Some(i) = widths.iter().position(|&w| w < min_width) else {
                break;
            };
            let last = widths.len() - 1;
            let into_right = i == 0 || (i < last && widths[i + 1] >= widths[i - 1]);
            if into_right {
                self.cuts.remove(i + 1);
                self.bands.remove(i);
            } else {
                self.cuts.remove(i);
                self.bands.remove(i);
            }
        }
    }
}

fn dense_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

/// Number of grid points for the domination and sup-error checks.
pub const CHECK_GRID: usize = 10_000;

pub fn approximate_density(
    f0: &dyn LogConcave,
    interval: (f64, f64),
    n: u64,
    constants: &ApproxConstants,
) -> Result<ApproxReport> {
    let (a_n, b_n) = interval;
    if n < constants.n0 {
        return Err(Error::invalid(
            "n",
            format!("n = {n} is below n0 = {}; the construction is only certified above it", constants.n0),
        ));
    }
    if !(a_n.is_finite() && b_n.is_finite() && a_n < b_n) {
        return Err(Error::invalid("interval", format!("[{a_n}, {b_n}] is not a proper interval")));
    }
    let envelope = fit_envelope(f0)?;
    let nf = n as f64;
    let ln_n = nf.ln();
    let s_n = 4.0 * ln_n / (5.0 * envelope.alpha);
    if a_n > -2.0 * s_n || b_n < 2.0 * s_n {
        return Err(Error::invalid(
            "interval",
            format!(
                "[{a_n}, {b_n}] must contain [-{0}, {0}] (8 log n / (5 alpha) with alpha = {1})",
                2.0 * s_n,
                envelope.alpha
            ),
        ));
    }
    let steep = nf.powf(0.8);
    let (dlo, dhi) = f0.domain();
    let (lo, hi) = ((-s_n).max(dlo), s_n.min(dhi));
    check_log_concave(f0, lo, hi)?;

    let mass = integrate_piecewise(&|x: f64| f0.log_value(x).exp(), lo, hi, &f0.kinks(), 4096, 1e-13)?;
    if !(mass > 0.0) {
        return Err(Error::Data(format!("no mass on [{lo}, {hi}]")));
    }
    let w1 = Truncated {
        f: f0,
        lo,
        hi,
        shift: mass.ln(),
    };

    // Core interval B.
    let level = -0.8 * ln_n;
    let mode = transition(|x| w1.right_derivative(x) <= 0.0, lo, hi);
    if !(w1.log_value(mode) >= level) {
        return Err(Error::invalid(
            "n",
            format!("n = {n} too small: the truncated log-density never reaches -(4/5) log n"),
        ));
    }
    let x0 = [
        transition(|x| w1.log_value(x) >= level, lo, mode),
        transition(|x| w1.left_derivative(x) <= steep, lo, mode),
    ]
    .into_iter()
    .fold(lo, f64::max);
    let xm = [
        transition(|x| w1.log_value(x) < level, mode, hi),
        transition(|x| w1.right_derivative(x) < -steep, mode, hi),
    ]
    .into_iter()
    .fold(hi, f64::min);
    let sep = nf.powf(-1.2) * ln_n;
    if !(xm - x0 > sep) {
        return Err(Error::invalid("n", format!("core interval [{x0}, {xm}] is degenerate")));
    }

    // Slope bands.
    let d = constants.slope_floor;
    let jn = ((steep / d).log2().ceil() as i64 - 1).max(0) as u32;
    let t = |j: u32| steep * 0.5f64.powi(j as i32);
    let mut cuts = vec![x0];
    let mut bands = Vec::new();
    for j in 1..=jn + 1 {
        cuts.push(transition(|x| w1.right_derivative(x) <= t(j), x0, xm));
        bands.push(Some(j - 1));
    }
    bands.push(None);
    for j in (1..=jn + 1).rev() {
        cuts.push(transition(|x| w1.left_derivative(x) < -t(j), x0, xm));
        bands.push(Some(j - 1));
    }
    cuts.push(xm);
    let mut pieces = Pieces { cuts, bands };
    pieces.merge_short(sep);

    let mut points: Vec<f64> = vec![x0];
    let mut red: Vec<bool> = vec![false];
    for (c, band) in pieces.cuts.windows(2).zip(&pieces.bands) {
        let width = c[1] - c[0];
        let m = match band {
            Some(j) => 0.5f64.powf(*j as f64 / 2.0) * nf.powf(0.6) * width.sqrt() / ln_n.sqrt(),
            None => nf.powf(0.2) * (d * width / ln_n).sqrt(),
        };
        let m = (m.ceil() as usize).max(1);
        let p = super::build_partition(&w1, c[0], c[1], m)?;
        *red.last_mut().unwrap() |= p.red_flags[0];
        points.extend_from_slice(&p.points[1..]);
        red.extend_from_slice(&p.red_flags[1..]);
    }
    let partition = Partition {
        points,
        red_flags: red,
    };
    let inner = midpoint_interpolant(&w1, &partition)?;

    // Linear extension to [a_n, b_n].
    let left_slope = w1.left_derivative(x0).clamp(-steep, steep);
    let right_slope = w1.right_derivative(xm).clamp(-steep, steep);
    let (ib, iv) = (inner.breakpoints(), inner.values());
    let mut bp = Vec::with_capacity(ib.len() + 2);
    let mut vals = Vec::with_capacity(ib.len() + 2);
    bp.push(a_n);
    vals.push(iv[0] + left_slope * (a_n - x0));
    bp.extend_from_slice(ib);
    vals.extend_from_slice(iv);
    bp.push(b_n);
    vals.push(iv[iv.len() - 1] + right_slope * (b_n - xm));
    let raw = PiecewiseLinearFn::new(bp, vals)?;
    let plf = raw.shifted(-log_norm_const(&raw));
    let concave = plf.is_concave();
    let density = NormalizedDensity::new(plf.clone());

    let knots = &plf.breakpoints()[1..plf.breakpoints().len() - 1];
    let knot_count = knots.len();
    let min_knot_gap = knots.windows(2).map(|k| k[1] - k[0]).fold(f64::INFINITY, f64::min);

    let mut core_grid = dense_grid(x0, xm, CHECK_GRID);
    core_grid.extend_from_slice(&partition.points);
    let sup_error_on_b = core_grid
        .iter()
        .map(|&x| (inner.eval(x) - w1.log_value(x)).abs())
        .filter(|e| e.is_finite())
        .fold(0.0, f64::max);

    let truth = ExpOf { f: f0, shift: 0.0 };
    let h2 = hellinger_sq(&truth, &density, &HellingerOptions::default())?;

    let max_ratio = dense_grid(a_n, b_n, CHECK_GRID)
        .iter()
        .map(|&x| (f0.log_value(x) - density.ln_pdf(x)).exp())
        .fold(0.0, f64::max);

    let rep = plf_to_mixture(&plf)?;
    let back = rep.mixture.to_plf();
    let round_trip_error = plf
        .breakpoints()
        .iter()
        .zip(plf.values())
        .map(|(&x, &v)| (back.eval(x) + rep.gamma3 - v).abs())
        .fold(0.0, f64::max);

    let width = b_n - a_n;
    let bounds = ApproxBounds {
        knot_count: constants.knot_count * nf.powf(0.2) * ln_n,
        knot_gap: constants.knot_gap * sep,
        hellinger_sq: constants.hellinger * (ln_n * ln_n * nf.powf(-0.8) + width * width * nf.powf(-1.6)),
        domination: constants.domination,
        gamma1: 2.0 * width * steep,
        gamma2: steep,
    };
    let gamma1 = rep.mixture.gamma1();
    let gamma2 = rep.mixture.gamma2();
    let checks = ApproxChecks {
        knot_count: knot_count as f64 <= bounds.knot_count,
        knot_gap: knot_count < 2 || min_knot_gap >= bounds.knot_gap,
        support: plf.support() == (a_n, b_n) && plf.values().iter().all(|v| v.is_finite()),
        domination: max_ratio <= bounds.domination,
        hellinger: h2 <= bounds.hellinger_sq,
        representation: (0.0..=bounds.gamma1).contains(&gamma1)
            && gamma2.abs() <= bounds.gamma2
            && round_trip_error <= 1e-8 * (1.0 + plf.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))),
        concave,
    };
    Ok(ApproxReport {
        n,
        interval,
        envelope,
        truncation: s_n,
        core: (x0, xm),
        knot_count,
        min_knot_gap,
        sup_error_on_b,
        hellinger_sq: h2,
        max_ratio,
        gamma1,
        gamma2,
        gamma3: rep.gamma3,
        thetas: rep.mixture.knots().to_vec(),
        weights: rep.mixture.weights().to_vec(),
        round_trip_error,
        constants: *constants,
        bounds,
        checks,
        plf,
    })
}

/// Rejects inputs whose right derivative increases somewhere on `[lo, hi]`.
fn check_log_concave(f0: &dyn LogConcave, lo: f64, hi: f64) -> Result<()> {
    let grid = dense_grid(lo, hi, 2001);
    let mut prev = f64::INFINITY;
    for &x in &grid[..grid.len() - 1] {
        let d = f0.right_derivative(x);
        if d > prev + 1e-9 * (1.0 + prev.abs()) {
            return Err(Error::invalid(
                "log-concavity",
                format!("log-density slope increases near x = {x}"),
            ));
        }
        prev = d;
    }
    Ok(())
}
