#![allow(dead_code)]

use logconcave::PiecewiseLinearFn;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Adaptive Simpson written independently of the library's quadrature.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Linear interpolation of `(xs, ys)`, written independently of the library.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let j = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
    let t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] + t * (ys[j] - ys[j - 1])
}

/// Integral of `exp(w)` segment by segment with adaptive Simpson.
pub fn integral_exp(w: &PiecewiseLinearFn) -> f64 {
    let (xs, ys) = (w.breakpoints(), w.values());
    let top = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for j in 1..xs.len() {
        let f = |x: f64| (interp(xs, ys, x) - top).exp();
        total += simpson(&f, xs[j - 1], xs[j], 1e-15);
    }
    total * top.exp()
}

/// A random concave plf with `segments` pieces on `[lo, hi]`.
pub fn random_concave<R: Rng>(rng: &mut R, segments: usize, lo: f64, hi: f64, max_slope: f64) -> PiecewiseLinearFn {
    let mut gaps: Vec<f64> = (0..segments).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = gaps.iter().sum();
    gaps.iter_mut().for_each(|g| *g *= (hi - lo) / total);
    let mut xs = vec![lo];
    for g in &gaps {
        xs.push(xs.last().unwrap() + g);
    }
    *xs.last_mut().unwrap() = hi;
    let mut slopes: Vec<f64> = (0..segments).map(|_| rng.random_range(-max_slope..max_slope)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let mut ys = vec![rng.random_range(-5.0..5.0)];
    for j in 0..segments {
        ys.push(ys[j] + slopes[j] * (xs[j + 1] - xs[j]));
    }
    PiecewiseLinearFn::new_concave(xs, ys).expect("constructed concave")
}

pub fn concave_from_seed(seed: u64, segments: usize) -> PiecewiseLinearFn {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let lo = rng.random_range(-5.0..0.0);
    let hi = lo + rng.random_range(0.5..6.0);
    random_concave(&mut rng, segments, lo, hi, 10.0)
}

pub fn arb_concave() -> impl Strategy<Value = PiecewiseLinearFn> {
    (any::<u64>(), 1usize..30).prop_map(|(seed, k)| concave_from_seed(seed, k))
}

/// Slopes non-increasing, compared in cross-multiplied form
/// `(w1 - w0) d1 >= (w2 - w1) d0` relative to the size of the terms.
pub fn slopes_non_increasing(w: &PiecewiseLinearFn, tol: f64) -> bool {
    let (x, v) = (w.breakpoints(), w.values());
    (0..x.len().saturating_sub(2)).all(|j| {
        let (d0, d1) = (x[j + 1] - x[j], x[j + 2] - x[j + 1]);
        let lhs = (v[j + 1] - v[j]) * d1;
        let rhs = (v[j + 2] - v[j + 1]) * d0;
        let scale = (1.0 + v[j].abs() + v[j + 1].abs() + v[j + 2].abs()) * (d0 + d1);
        lhs - rhs >= -tol * scale
    })
}

/// One-parameter restriction of the sampler: N = 1, theta = b - a = 1 on
/// [0, 1], gamma1 fixed, only gamma2 moves. Returns the sup distance between
/// the empirical CDF of the gamma2 draws and the CDF of the posterior
/// computed on a grid.
pub fn restricted_model_cdf_distance(seed: u64, iterations: usize) -> f64 {
    use logconcave::mcmc::{BlockMask, ProposalConfig, Sampler};
    use logconcave::priors::{Params, PriorConfig, SupportMode, Truncation};
    use logconcave::seed::{stream, Purpose};
    use logconcave::{sample_truth, TruthSpec};

    let gamma1 = 1.0;
    let scale2 = 10.0;
    let truth = TruthSpec::Beta { a: 1.0, b: 2.0 };
    let data = sample_truth(&truth, &mut stream(seed, Purpose::Data, 0), 25);
    let prior = PriorConfig {
        truncation: Truncation::Level(1),
        gamma2_scale: scale2,
        support: SupportMode::Fixed { lower: 0.0, upper: 1.0 },
        ..PriorConfig::default()
    };
    let blocks = BlockMask {
        theta: false,
        weights: false,
        gamma1: false,
        gamma2: true,
        support: false,
    };
    let init = Params {
        lower: 0.0,
        upper: 1.0,
        thetas: vec![1.0],
        sticks: vec![],
        weights: vec![1.0],
        gamma1,
        gamma2: 0.0,
    };
    let mut sampler = Sampler::new(prior, ProposalConfig::default(), blocks, &data, init).unwrap();
    let mut rng = stream(seed, Purpose::Chain, 0);
    let burn_in = 2_000;
    let mut draws = Vec::with_capacity(iterations);
    for t in 0..burn_in + iterations {
        sampler.sweep(&mut rng, (t < burn_in).then_some(t));
        if t >= burn_in {
            draws.push(sampler.state().params.gamma2);
        }
    }
    draws.sort_by(f64::total_cmp);

    // w(x) = (gamma1 - gamma2) x on [0, 1]; log int e^w = ln((e^s - 1)/s).
    let sum_x: f64 = data.iter().sum();
    let n = data.len() as f64;
    let log_post = |g2: f64| {
        let s = gamma1 - g2;
        let log_z = if s.abs() < 1e-8 { s / 2.0 } else { (s.exp_m1() / s).abs().ln() };
        s * sum_x - n * log_z - (1.0 + (g2 / scale2).powi(2)).ln()
    };
    let (lo, hi, k) = (-40.0, 40.0, 400_000);
    let h = (hi - lo) / k as f64;
    let lp: Vec<f64> = (0..=k).map(|i| log_post(lo + i as f64 * h)).collect();
    let top = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = lp.iter().map(|l| (l - top).exp()).collect();
    let mut cdf = vec![0.0; k + 1];
    for i in 1..=k {
        cdf[i] = cdf[i - 1] + 0.5 * h * (dens[i - 1] + dens[i]);
    }
    let total = cdf[k];
    let grid_cdf = |x: f64| {
        let t = ((x - lo) / h).clamp(0.0, k as f64);
        let i = (t.floor() as usize).min(k - 1);
        (cdf[i] + (t - i as f64) * (cdf[i + 1] - cdf[i])) / total
    };
    let m = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = grid_cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}
