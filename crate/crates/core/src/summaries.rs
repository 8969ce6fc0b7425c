//! Posterior summaries: pointwise bands, the mode histogram, coverage
//! experiments and log-log rate fits.
//!
//! Quantiles are type 7: for sorted `v_0..v_{k-1}` and level `p`, interpolate
//! linearly at position `(k - 1) p`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::hellinger::{hellinger, HellingerOptions};
use crate::mcmc::{run_chain_with, Chain, ChainConfig};
use crate::seed::{self, Purpose};
use crate::truth::{sample_truth, TruthSpec};

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let k = sorted.len();
    let h = (k - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(k - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Type-7 quantiles `(1 - level) / 2` and `(1 + level) / 2` of the values.
pub fn credible_interval(values: &[f64], level: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (
        quantile_sorted(&v, (1.0 - level) / 2.0),
        quantile_sorted(&v, (1.0 + level) / 2.0),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

pub fn band_from_chain(chain: &Chain, level: f64) -> Result<BandSummary> {
    if chain.grid_evals.is_empty() {
        return Err(Error::Data("chain has no kept states".into()));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::invalid("level", format!("{level} not in (0, 1]")));
    }
    let k = chain.grid_evals.len() as f64;
    let mut mean = Vec::with_capacity(chain.grid.len());
    let mut lower = Vec::with_capacity(chain.grid.len());
    let mut upper = Vec::with_capacity(chain.grid.len());
    let mut column = Vec::with_capacity(chain.grid_evals.len());
    for g in 0..chain.grid.len() {
        column.clear();
        column.extend(chain.grid_evals.iter().map(|row| row[g]));
        mean.push(column.iter().sum::<f64>() / k);
        let (lo, hi) = credible_interval(&column, level);
        lower.push(lo);
        upper.push(hi);
    }
    Ok(BandSummary {
        grid: chain.grid.clone(),
        mean,
        lower,
        upper,
        level,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeHistogram {
    /// Bin edges; bins are `[b_i, b_{i+1})`, the last one closed.
    pub breaks: Vec<f64>,
    pub counts: Vec<u64>,
    pub modes: Vec<f64>,
}

impl ModeHistogram {
    pub fn from_sample(modes: Vec<f64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Data("no modes to bin".into()));
        }
        let mut sorted = modes.clone();
        sorted.sort_by(f64::total_cmp);
        let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
        let k = sorted.len() as f64;
        let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
        let breaks = if max == min {
            vec![min - 0.5, min + 0.5]
        } else {
            let width = if iqr > 0.0 {
                2.0 * iqr / k.cbrt()
            } else {
                // Sturges when the interquartile range vanishes.
                (max - min) / (k.log2().ceil() + 1.0)
            };
            let bins = (((max - min) / width).ceil() as usize).max(1);
            (0..=bins)
                .map(|i| if i == bins { max } else { min + i as f64 * (max - min) / bins as f64 })
                .collect()
        };
        let bins = breaks.len() - 1;
        let mut counts = vec![0u64; bins];
        for &m in &modes {
            let i = breaks.partition_point(|&b| b <= m).saturating_sub(1).min(bins - 1);
            counts[i] += 1;
        }
        Ok(Self { breaks, counts, modes })
    }

    pub fn sd(&self) -> f64 {
        let k = self.modes.len() as f64;
        let mean = self.modes.iter().sum::<f64>() / k;
        (self.modes.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0)).sqrt()
    }

    pub fn median(&self) -> f64 {
        let mut v = self.modes.clone();
        v.sort_by(f64::total_cmp);
        quantile_sorted(&v, 0.5)
    }
}

/// Histogram of the modes of the kept states, Freedman-Diaconis bins.
pub fn mode_marginal(chain: &Chain) -> Result<ModeHistogram> {
    ModeHistogram::from_sample(chain.modes()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub n: usize,
    pub points: Vec<f64>,
    pub hits: Vec<u64>,
    pub replications: u64,
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTable {
    pub points: Vec<f64>,
    pub n_values: Vec<usize>,
    pub replications: u64,
    /// One row per sample size, one column per point.
    pub frequencies: Vec<Vec<f64>>,
}

impl CoverageTable {
    pub fn from_rows(rows: &[CoverageRow]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Data("no coverage rows".into()))?;
        Ok(Self {
            points: first.points.clone(),
            n_values: rows.iter().map(|r| r.n).collect(),
            replications: first.replications,
            frequencies: rows.iter().map(|r| r.frequencies.clone()).collect(),
        })
    }
}

pub(crate) fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Coverage with a caller-supplied fit. `fit(data, replication)` returns the
/// posterior draws of `f(x)` for every point; a hit is the truth inside the
/// central 95% interval of those draws. Replication `r` draws its data from
/// `seed::stream(seed, Data, r)`.
pub fn coverage_experiment_with<F>(
    truth: &TruthSpec,
    points: &[f64],
    n: usize,
    replications: u64,
    seed: u64,
    jobs: usize,
    fit: F,
) -> Result<CoverageRow>
where
    F: Fn(&[f64], u64) -> Result<Vec<Vec<f64>>> + Sync,
{
    if replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let per_rep: Vec<Vec<bool>> = pool(jobs.max(1))?.install(|| {
        (0..replications)
            .into_par_iter()
            .map(|r| {
                let data = sample_truth(truth, &mut seed::stream(seed, Purpose::Data, r), n);
                let draws = fit(&data, r)?;
                if draws.len() != points.len() {
                    return Err(Error::Numeric(format!(
                        "fit returned draws for {} points, expected {}",
                        draws.len(),
                        points.len()
                    )));
                }
                Ok(points
                    .iter()
                    .zip(&draws)
                    .map(|(&x, d)| {
                        let (lo, hi) = credible_interval(d, 0.95);
                        let f = truth.pdf(x);
                        lo <= f && f <= hi
                    })
                    .collect())
            })
            .collect::<Result<_>>()
    })?;
    let mut hits = vec![0u64; points.len()];
    for rep in &per_rep {
        for (h, &hit) in hits.iter_mut().zip(rep) {
            *h += hit as u64;
        }
    }
    Ok(CoverageRow {
        n,
        points: points.to_vec(),
        frequencies: hits.iter().map(|&h| h as f64 / replications as f64).collect(),
        hits,
        replications,
    })
}

/// Coverage of the pointwise 95% credible intervals of the posterior.
/// Replication `r` runs its chain on `seed::stream(seed, Chain, r)`.
pub fn coverage_experiment(
    truth: &TruthSpec,
    points: &[f64],
    n: usize,
    replications: u64,
    cfg: &ChainConfig,
    seed: u64,
    jobs: usize,
) -> Result<CoverageRow> {
    coverage_experiment_with(truth, points, n, replications, seed, jobs, |data, r| {
        let chain = run_chain_with(cfg, data, &mut seed::stream(seed, Purpose::Chain, r), seed)?;
        points.iter().map(|&x| chain.eval_at(x)).collect()
    })
}

/// Least-squares line through `(x, y)`: slope and its standard error.
/// `None` with fewer than three points, constant `x`, or non-finite input.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let k = x.len();
    if k < 3 || y.len() != k || x.iter().chain(y).any(|v| !v.is_finite()) {
        return None;
    }
    let kf = k as f64;
    let mx = x.iter().sum::<f64>() / kf;
    let my = y.iter().sum::<f64>() / kf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Some((slope, (rss / (kf - 2.0) / sxx).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub n: Vec<usize>,
    /// Distances, one row per sample size, one column per seed.
    pub hellinger: Vec<Vec<f64>>,
    pub slope: Option<f64>,
    pub standard_error: Option<f64>,
    /// Set when a distance is zero (or not finite) and the log-log fit is undefined.
    pub degenerate: bool,
}

impl RateFit {
    pub fn from_distances(n: Vec<usize>, hellinger: Vec<Vec<f64>>) -> Self {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (&ni, row) in n.iter().zip(&hellinger) {
            for &h in row {
                x.push((ni as f64).ln());
                y.push(h.ln());
            }
        }
        let fit = ols_slope(&x, &y);
        Self {
            n,
            hellinger,
            slope: fit.map(|f| f.0),
            standard_error: fit.map(|f| f.1),
            degenerate: fit.is_none(),
        }
    }
}

/// Hellinger distance from the posterior mean to the truth for each sample
/// size and seed index, with the log-log slope over all of them. Seed index
/// `s` uses the data stream `(seed, Data, s)` (so larger samples extend
/// smaller ones) and the chain stream `(seed, Chain, s)`.
pub fn rate_diagnostic(
    truth: &TruthSpec,
    n_values: &[usize],
    seeds: u64,
    cfg: &ChainConfig,
    seed: u64,
    jobs: usize,
) -> Result<RateFit> {
    if n_values.len() < 3 {
        return Err(Error::invalid("n", "need at least three sample sizes"));
    }
    let tasks: Vec<(usize, u64)> = n_values
        .iter()
        .flat_map(|&n| (0..seeds).map(move |s| (n, s)))
        .collect();
    let opts = HellingerOptions::default();
    let dist: Vec<f64> = pool(jobs.max(1))?.install(|| {
        tasks
            .par_iter()
            .map(|&(n, s)| {
                let data = sample_truth(truth, &mut seed::stream(seed, Purpose::Data, s), n);
                let chain = run_chain_with(cfg, &data, &mut seed::stream(seed, Purpose::Chain, s), seed)?;
                let mean = chain.posterior_mean()?;
                hellinger(&mean, truth as &dyn Density, &opts)
            })
            .collect::<Result<_>>()
    })?;
    let rows = dist.chunks(seeds as usize).map(|c| c.to_vec()).collect();
    Ok(RateFit::from_distances(n_values.to_vec(), rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.25) - 1.75).abs() < 1e-15);
        let (lo, hi) = credible_interval(&[5.0, 3.0], 0.95);
        assert!((lo - 3.05).abs() < 1e-12 && (hi - 4.95).abs() < 1e-12);
    }

    #[test]
    fn histogram_totals() {
        let h = ModeHistogram::from_sample(vec![1.0; 7]).unwrap();
        assert_eq!(h.counts, vec![7]);
        assert!(h.breaks[0] <= 1.0 && 1.0 < h.breaks[1]);
        let modes: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = ModeHistogram::from_sample(modes).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 100);
    }

    #[test]
    fn ols_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, -1.0, -3.0, -5.0];
        let (s, se) = ols_slope(&x, &y).unwrap();
        assert!((s + 2.0).abs() < 1e-12 && se < 1e-12);
        assert!(ols_slope(&x[..2], &y[..2]).is_none());
        let r = RateFit::from_distances(vec![10, 20, 40], vec![vec![0.0], vec![0.0], vec![0.0]]);
        assert!(r.degenerate && r.slope.is_none());
    }
}
