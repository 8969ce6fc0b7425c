//! Constructive piecewise log-linear approximation of log-concave densities.
//!
//! The pipeline is: a partition of an interval adapted to the slope changes of
//! a concave function ([`build_partition`]), the midpoint interpolant of the
//! function on that partition ([`midpoint_interpolant`]), the assembled
//! approximation of a whole density with its certificate
//! ([`approximate_density`]), and the conversion of a concave piecewise-linear
//! function back into mixture parameters ([`plf_to_mixture`]).

mod construct;
mod interpolant;
mod mixrep;
mod partition;

pub use construct::{
    approximate_density, fit_envelope, ApproxChecks, ApproxConstants, ApproxReport, Envelope,
};
pub use interpolant::midpoint_interpolant;
pub use mixrep::{plf_to_mixture, MixtureRepresentation};
pub use partition::{build_partition, candidate_partition, Partition};

use crate::density::Density;
use crate::plf::{PiecewiseLinearFn, CONCAVITY_TOLERANCE};
use crate::truth::TruthSpec;

/// A concave function, typically a log-density, with one-sided derivatives.
///
/// Outside [`LogConcave::domain`] the value is `-inf`. The derivative
/// conventions follow [`TruthSpec::dlog_right`]: `+inf` left of the domain,
/// `-inf` right of it.
pub trait LogConcave {
    fn log_value(&self, x: f64) -> f64;
    fn right_derivative(&self, x: f64) -> f64;
    fn left_derivative(&self, x: f64) -> f64;
    /// Points where the function is not differentiable.
    fn kinks(&self) -> Vec<f64>;
    /// Where the value is finite; ends may be infinite.
    fn domain(&self) -> (f64, f64);
    /// A finite interval holding all but a negligible part of `exp(value)`.
    fn effective_domain(&self) -> (f64, f64) {
        self.domain()
    }
}

impl LogConcave for TruthSpec {
    fn log_value(&self, x: f64) -> f64 {
        self.ln_pdf(x)
    }
    fn right_derivative(&self, x: f64) -> f64 {
        self.dlog_right(x)
    }
    fn left_derivative(&self, x: f64) -> f64 {
        self.dlog_left(x)
    }
    fn kinks(&self) -> Vec<f64> {
        TruthSpec::kinks(self)
    }
    fn domain(&self) -> (f64, f64) {
        self.exact_support()
    }
    fn effective_domain(&self) -> (f64, f64) {
        self.effective_support()
    }
}

impl LogConcave for PiecewiseLinearFn {
    fn log_value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn right_derivative(&self, x: f64) -> f64 {
        PiecewiseLinearFn::right_derivative(self, x)
    }
    fn left_derivative(&self, x: f64) -> f64 {
        PiecewiseLinearFn::left_derivative(self, x)
    }
    fn kinks(&self) -> Vec<f64> {
        PiecewiseLinearFn::kinks(self, CONCAVITY_TOLERANCE)
    }
    fn domain(&self) -> (f64, f64) {
        self.support()
    }
}

/// `exp(log_value - shift)` viewed as a density for quadrature.
pub(crate) struct ExpOf<'a> {
    pub f: &'a dyn LogConcave,
    pub shift: f64,
}

impl Density for ExpOf<'_> {
    fn pdf(&self, x: f64) -> f64 {
        (self.f.log_value(x) - self.shift).exp()
    }
    fn support(&self) -> (f64, f64) {
        self.f.effective_domain()
    }
    fn singular_points(&self) -> Vec<f64> {
        self.f.kinks()
    }
}

pub(crate) fn is_kink(kinks: &[f64], x: f64) -> bool {
    kinks.iter().any(|&k| (k - x).abs() <= 1e-12 * (1.0 + x.abs()))
}

/// Transition point of a predicate that is false then true on `[lo, hi]`.
/// Returns `lo` if it already holds there and `hi` if it never does.
pub(crate) fn transition<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64) -> f64 {
    if pred(lo) {
        return lo;
    }
    if !pred(hi) {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
