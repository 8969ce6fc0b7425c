//! Log-concave maximum likelihood estimation.
//!
//! The log-density is piecewise linear with knots at the distinct
//! observations. We maximise
//!
//! ```text
//! L(phi) = sum_k w_k phi(x_k) - int exp(phi) + 1
//! ```
//!
//! over concave `phi` by an active-set ascent. On each face `phi` is linear
//! between the active knots and the objective is maximised over the knot
//! values by damped Newton steps; a step that would make the slopes stop
//! decreasing at a knot is cut short there and the knot dropped. When the
//! face is solved, the observation whose added kink has the largest positive
//! directional derivative joins the knot set. The returned `projected_gradient`
//! is the larger of the face gradient and that directional derivative.

use serde::{Deserialize, Serialize};

use crate::density::{log_norm_const, Density, NormalizedDensity};
use crate::error::{Error, Result};
use crate::hellinger::{hellinger, HellingerOptions};
use crate::plf::PiecewiseLinearFn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MleOptions {
    /// Stationarity tolerance on the face gradient and on the gain from
    /// adding a kink.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    /// Normalised log-density on `[X_(1), X_(n)]`.
    pub plf: PiecewiseLinearFn,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub projected_gradient: f64,
}

impl MleResult {
    pub fn density(&self) -> NormalizedDensity {
        NormalizedDensity::new(self.plf.clone())
    }
}

const ARMIJO: f64 = 1e-4;
const SERIES_CUTOFF: f64 = 0.5;

/// `int_0^1 t^p (1 - t)^q e^{d t} dt` for `p + q <= 2`.
fn jint(p: u32, q: u32, d: f64) -> f64 {
    if d.abs() < SERIES_CUTOFF {
        // sum_k d^k / k! * B(p + k + 1, q + 1)
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        let mut term = fact(p) * fact(q) / fact(p + q + 1);
        let mut total = term;
        for k in 0..30u32 {
            term *= d / f64::from(k + 1) * f64::from(p + k + 1) / f64::from(p + k + q + 2);
            total += term;
            if term.abs() < 1e-18 * total.abs() {
                break;
            }
        }
        return total;
    }
    if d > 0.0 {
        // Reflect t -> 1 - t so the closed forms only see negative rates.
        return d.exp() * jint(q, p, -d);
    }
    let e = d.exp();
    let e0 = d.exp_m1() / d;
    let t1 = (e * (d - 1.0) + 1.0) / (d * d);
    let t2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
    match (p, q) {
        (0, 0) => e0,
        (1, 0) => t1,
        (0, 1) => e0 - t1,
        (2, 0) => t2,
        (1, 1) => t1 - t2,
        (0, 2) => e0 - 2.0 * t1 + t2,
        _ => unreachable!("only moments up to order two are needed"),
    }
}

struct Problem {
    x: Vec<f64>,
    w: Vec<f64>,
}

/// A face of the constraint set: `phi` is linear between consecutive
/// entries of `knots` (indices into the distinct observations) and takes the
/// values `psi` there.
#[derive(Clone)]
struct Face {
    knots: Vec<usize>,
    psi: Vec<f64>,
    value: f64,
}

impl Problem {
    fn new(data: &[f64]) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::Data(format!(
                "the log-concave MLE needs at least 2 observations, got {}",
                data.len()
            )));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::Data(format!("observation {x} is not finite")));
        }
        let mut xs = data.to_vec();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut x: Vec<f64> = Vec::new();
        let mut w: Vec<f64> = Vec::new();
        for v in xs {
            if x.last() == Some(&v) {
                *w.last_mut().unwrap() += 1.0 / n;
            } else {
                x.push(v);
                w.push(1.0 / n);
            }
        }
        if x.len() < 2 {
            return Err(Error::Data("all observations are equal".into()));
        }
        Ok(Self { x, w })
    }

    fn face(&self, knots: Vec<usize>, psi: Vec<f64>) -> Face {
        let value = self.objective(&knots, &psi);
        Face { knots, psi, value }
    }

    fn objective(&self, knots: &[usize], psi: &[f64]) -> f64 {
        let mut total = 1.0;
        for i in 0..knots.len() - 1 {
            let (p, q) = (knots[i], knots[i + 1]);
            let len = self.x[q] - self.x[p];
            let slope = (psi[i + 1] - psi[i]) / len;
            total += self.w[p..q]
                .iter()
                .zip(&self.x[p..q])
                .map(|(w, x)| w * (psi[i] + slope * (x - self.x[p])))
                .sum::<f64>();
            total -= len * psi[i].exp() * jint(0, 0, psi[i + 1] - psi[i]);
        }
        total += self.w[self.x.len() - 1] * psi[psi.len() - 1];
        if total.is_finite() {
            total
        } else {
            f64::NEG_INFINITY
        }
    }

    /// `phi` at every distinct observation.
    fn phi(&self, f: &Face) -> Vec<f64> {
        let mut phi = vec![0.0; self.x.len()];
        for i in 0..f.knots.len() - 1 {
            let (p, q) = (f.knots[i], f.knots[i + 1]);
            let slope = (f.psi[i + 1] - f.psi[i]) / (self.x[q] - self.x[p]);
            for (k, v) in phi.iter_mut().enumerate().take(q).skip(p) {
                *v = f.psi[i] + slope * (self.x[k] - self.x[p]);
            }
        }
        *phi.last_mut().unwrap() = *f.psi.last().unwrap();
        phi
    }

    /// Gradient and tridiagonal negative Hessian of the objective in `psi`.
    fn derivatives(&self, f: &Face) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let r = f.knots.len();
        let mut grad = vec![0.0; r];
        let mut diag = vec![0.0; r];
        let mut off = vec![0.0; r - 1];
        for (i, &k) in f.knots.iter().enumerate() {
            grad[i] += self.w[k];
        }
        for i in 0..r - 1 {
            let (p, q) = (f.knots[i], f.knots[i + 1]);
            let len = self.x[q] - self.x[p];
            for k in p + 1..q {
                let lam = (self.x[k] - self.x[p]) / len;
                grad[i] += self.w[k] * (1.0 - lam);
                grad[i + 1] += self.w[k] * lam;
            }
            let d = f.psi[i + 1] - f.psi[i];
            let scale = len * f.psi[i].exp();
            grad[i] -= scale * jint(0, 1, d);
            grad[i + 1] -= scale * jint(1, 0, d);
            diag[i] += scale * jint(0, 2, d);
            diag[i + 1] += scale * jint(2, 0, d);
            off[i] = scale * jint(1, 1, d);
        }
        (grad, diag, off)
    }

    fn slopes(&self, knots: &[usize], psi: &[f64]) -> Vec<f64> {
        (0..knots.len() - 1)
            .map(|i| (psi[i + 1] - psi[i]) / (self.x[knots[i + 1]] - self.x[knots[i]]))
            .collect()
    }

    /// One damped Newton step on the face. Returns the accepted face, with any
    /// knot whose slope constraint became active removed, or `None` when no
    /// ascent is possible.
    fn newton_step(&self, f: &Face, floor: f64) -> Option<Face> {
        let (grad, diag, off) = self.derivatives(f);
        let delta = solve_tridiagonal(&diag, &off, &grad)?;
        let predicted: f64 = grad.iter().zip(&delta).map(|(g, d)| g * d).sum();
        if !(predicted > 0.0) {
            return None;
        }
        let slopes = self.slopes(&f.knots, &f.psi);
        let dslopes = self.slopes(&f.knots, &delta);
        let mut alpha: f64 = 1.0;
        let mut binding = None;
        for i in 0..slopes.len().saturating_sub(1) {
            let rate = dslopes[i] - dslopes[i + 1];
            if rate < 0.0 {
                let limit = (slopes[i] - slopes[i + 1]) / -rate;
                if limit < alpha {
                    alpha = limit;
                    binding = Some(i + 1);
                }
            }
        }
        for _ in 0..60 {
            let psi: Vec<f64> = f.psi.iter().zip(&delta).map(|(p, d)| p + alpha * d).collect();
            let mut knots = f.knots.clone();
            let mut psi = psi;
            if let Some(b) = binding {
                // The step ends on this knot's constraint, so it leaves the face.
                knots.remove(b);
                psi.remove(b);
            }
            let (knots, psi) = self.drop_inactive(&knots, psi);
            let cand = self.face(knots, psi);
            if cand.value >= f.value + ARMIJO * alpha * predicted && cand.value >= floor {
                return Some(cand);
            }
            alpha *= 0.5;
            binding = None;
        }
        None
    }

    /// Removes interior knots where the slope no longer decreases.
    fn drop_inactive(&self, knots: &[usize], psi: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
        let mut knots = knots.to_vec();
        let mut psi = psi;
        loop {
            let slopes = self.slopes(&knots, &psi);
            match (0..slopes.len().saturating_sub(1)).find(|&i| slopes[i] <= slopes[i + 1]) {
                Some(i) => {
                    knots.remove(i + 1);
                    psi.remove(i + 1);
                }
                None => return (knots, psi),
            }
        }
    }

    /// Line search along the kink direction `-(x - x_k)_+` at the knot in
    /// position `pos`, so that the new knot starts strictly inside its
    /// constraint.
    fn bend(&self, f: &Face, pos: usize, gain: f64) -> Option<Face> {
        let xk = self.x[f.knots[pos]];
        let mut curvature = 0.0;
        for i in pos..f.knots.len() - 1 {
            let (p, q) = (f.knots[i], f.knots[i + 1]);
            let len = self.x[q] - self.x[p];
            let u0 = self.x[p] - xk;
            let d = f.psi[i + 1] - f.psi[i];
            curvature += len
                * f.psi[i].exp()
                * (u0 * u0 * jint(0, 0, d) + 2.0 * u0 * len * jint(1, 0, d) + len * len * jint(2, 0, d));
        }
        let mut eps = gain / curvature;
        for _ in 0..60 {
            let psi: Vec<f64> = f
                .psi
                .iter()
                .zip(&f.knots)
                .map(|(v, &k)| v - eps * (self.x[k] - xk).max(0.0))
                .collect();
            let cand = self.face(f.knots.clone(), psi);
            if cand.value > f.value {
                return Some(cand);
            }
            eps *= 0.5;
        }
        None
    }

    /// Directional derivative of the objective along `-(x - x_k)_+` for
    /// every observation `k`, i.e. the gain from adding a concave kink there.
    fn kink_gains(&self, phi: &[f64]) -> Vec<f64> {
        let m = self.x.len();
        let mut mass = vec![0.0; m];
        let mut first = vec![0.0; m];
        let mut data_w = vec![0.0; m];
        let mut data_x = vec![0.0; m];
        for j in (0..m).rev() {
            if j + 1 < m {
                let len = self.x[j + 1] - self.x[j];
                let d = phi[j + 1] - phi[j];
                let scale = len * phi[j].exp();
                let seg = scale * jint(0, 0, d);
                let seg_x = scale * (self.x[j] * jint(0, 0, d) + len * jint(1, 0, d));
                mass[j] = mass[j + 1] + seg;
                first[j] = first[j + 1] + seg_x;
                data_w[j] = data_w[j + 1] + self.w[j + 1];
                data_x[j] = data_x[j + 1] + self.w[j + 1] * self.x[j + 1];
            }
        }
        (0..m)
            .map(|k| {
                let xk = self.x[k];
                (first[k] - xk * mass[k]) - (data_x[k] - xk * data_w[k])
            })
            .collect()
    }
}

/// Thomas algorithm for a symmetric tridiagonal system.
fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if !(denom.abs() > 0.0) {
        return None;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        c[i - 1] = off[i - 1] / denom;
        denom = diag[i] - off[i - 1] * c[i - 1];
        if !(denom.abs() > 0.0) || !denom.is_finite() {
            return None;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// `(1/n) sum_i w(X_i) - int e^w + 1` for a log-density supported on the
/// data range.
pub fn mle_objective(data: &[f64], w: &PiecewiseLinearFn) -> f64 {
    let n = data.len() as f64;
    data.iter().map(|&x| w.eval(x)).sum::<f64>() / n - log_norm_const(w).exp() + 1.0
}

pub fn logconcave_mle(data: &[f64], opts: &MleOptions) -> Result<MleResult> {
    let problem = Problem::new(data)?;
    let m = problem.x.len();
    let width = problem.x[m - 1] - problem.x[0];
    let mut face = problem.face(vec![0, m - 1], vec![-width.ln(); 2]);
    let mut trace = vec![face.value];
    let mut converged = false;
    let mut pg = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        // Newton on the current face until its gradient is negligible.
        while iterations < opts.max_iter {
            let (grad, _, _) = problem.derivatives(&face);
            if grad.iter().all(|g| g.abs() <= 1e-3 * opts.tolerance) {
                break;
            }
            iterations += 1;
            match problem.newton_step(&face, *trace.last().unwrap()) {
                Some(next) if next.psi != face.psi || next.knots != face.knots => {
                    face = next;
                    trace.push(face.value);
                }
                _ => break,
            }
        }
        let (grad, _, _) = problem.derivatives(&face);
        let face_gradient = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let phi = problem.phi(&face);
        let gains = problem.kink_gains(&phi);
        let (best, gain) = gains
            .iter()
            .enumerate()
            .filter(|(k, _)| face.knots.binary_search(k).is_err())
            .fold((usize::MAX, 0.0f64), |acc, (k, &g)| if g > acc.1 { (k, g) } else { acc });
        pg = face_gradient.max(gain);
        if pg <= opts.tolerance {
            converged = true;
            break;
        }
        if gain <= opts.tolerance {
            // The face is not solved to tolerance yet no Newton step helps.
            break;
        }
        let pos = face.knots.binary_search(&best).unwrap_err();
        face.knots.insert(pos, best);
        face.psi.insert(pos, phi[best]);
        face.value = problem.objective(&face.knots, &face.psi);
        match problem.bend(&face, pos, gain) {
            Some(next) if next.value >= *trace.last().unwrap() => {
                face = next;
                trace.push(face.value);
            }
            _ => break,
        }
    }
    let breakpoints: Vec<f64> = face.knots.iter().map(|&k| problem.x[k]).collect();
    let raw = PiecewiseLinearFn::new(breakpoints, face.psi.clone())?;
    let plf = raw.shifted(-log_norm_const(&raw));
    Ok(MleResult {
        plf,
        objective_trace: trace,
        converged,
        iterations,
        projected_gradient: pg,
    })
}

pub fn hellinger_to_truth(result: &MleResult, truth: &dyn Density, opts: &HellingerOptions) -> Result<f64> {
    hellinger(&result.density(), truth, opts)
}
