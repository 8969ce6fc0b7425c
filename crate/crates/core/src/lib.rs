//! Bayesian log-concave density estimation on a compact interval.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod cli;
pub mod density;
pub mod error;
pub mod hellinger;
pub mod mcmc;
pub mod mixture;
pub mod mle;
pub mod plf;
pub mod priors;
pub mod quadrature;
pub mod seed;
pub mod summaries;
pub mod truth;

pub use density::{log_norm_const, Density, GridDensity, NormalizedDensity};
pub use error::{Error, Result};
pub use hellinger::{hellinger, hellinger_sq, HellingerOptions};
pub use mixture::{mixture_to_plf, MixtureLogDensity, Support};
pub use plf::{mode_of, PiecewiseLinearFn};
pub use truth::{eval_truth, sample_truth, TruthSpec};
