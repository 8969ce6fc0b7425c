use serde::Serialize;
use serde_json::json;

use super::config::ExperimentConfig;
use super::output::{fmt, header, read_sample, OutDir};
use crate::approx::{approximate_density, fit_envelope};
use crate::density::NormalizedDensity;
use crate::error::{Error, Result};
use crate::hellinger::{hellinger, HellingerOptions};
use crate::mcmc::{run_chain, Chain, ChainConfig};
use crate::mixture::Support;
use crate::mle::{hellinger_to_truth, logconcave_mle, mle_objective};
use crate::priors::{draw_params, draw_support, SupportMode};
use crate::seed::{self, Purpose};
use crate::summaries::{band_from_chain, coverage_experiment, mode_marginal, rate_diagnostic, CoverageTable};
use crate::truth::sample_truth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FitMode {
    Fixed,
    Empirical,
    Hierarchical,
}

/// The observations: read from `cfg.data`, or drawn from the truth on the
/// stream `(seed, Data, 0)` and saved with a JSON sidecar.
fn observations(cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<f64>> {
    if let Some(path) = &cfg.data {
        let xs = read_sample(path)?;
        if xs.is_empty() {
            return Err(Error::Data(format!("{} holds no observations", path.display())));
        }
        return Ok(xs);
    }
    let xs = sample_truth(&cfg.truth, &mut seed::stream(cfg.seed, Purpose::Data, 0), cfg.n);
    let rows: Vec<Vec<String>> = xs.iter().map(|&x| vec![fmt(x)]).collect();
    out.csv("sample.csv", &header(&["x"]), &rows)?;
    out.json(
        "sample.json",
        &json!({
            "truth": cfg.truth,
            "seed": cfg.seed,
            "n": cfg.n,
            "stream": {"purpose": "data", "index": 0},
        }),
    )?;
    Ok(xs)
}

pub fn sample_prior(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let section = &cfg.sample_prior;
    let mut prior = cfg.prior;
    if prior.support == SupportMode::Empirical {
        let (lower, upper) = section.support;
        prior.support = SupportMode::Fixed { lower, upper };
    }
    prior.validate().map_err(|e| Error::Config(e.to_string()))?;
    let atoms = section.atoms.unwrap_or_else(|| prior.atoms(cfg.n)).max(1);
    let mut rows = Vec::new();
    let mut draws = Vec::with_capacity(section.draws);
    for k in 0..section.draws {
        let mut rng = seed::stream(cfg.seed, Purpose::Prior, k as u64);
        let support = draw_support(&prior, &mut rng)?;
        let params = draw_params(&prior, support, atoms, &mut rng);
        let density = NormalizedDensity::new(params.to_mixture()?.to_plf());
        for (x, f) in support.grid(cfg.grid_size).iter().zip(density.eval_sorted(&support.grid(cfg.grid_size))) {
            rows.push(vec![k.to_string(), fmt(*x), fmt(f)]);
        }
        draws.push(params);
    }
    out.csv("prior_draws.csv", &header(&["draw", "x", "density"]), &rows)?;
    out.json(
        "prior_draws.json",
        &json!({"seed": cfg.seed, "atoms": atoms, "prior": prior, "draws": draws}),
    )?;
    Ok(())
}

fn chain_rows(chain: &Chain) -> (Vec<String>, Vec<Vec<String>>) {
    let atoms = chain.meta.atoms;
    let mut head = header(&["iteration", "log_posterior", "gamma1", "gamma2", "lower", "upper"]);
    head.extend((1..=atoms).map(|i| format!("theta_{i}")));
    head.extend((1..=atoms).map(|i| format!("p_{i}")));
    let rows = chain
        .records
        .iter()
        .map(|r| {
            let p = &r.params;
            let mut row = vec![
                r.iteration.to_string(),
                fmt(r.log_posterior),
                fmt(p.gamma1),
                fmt(p.gamma2),
                fmt(p.lower),
                fmt(p.upper),
            ];
            row.extend(p.thetas.iter().map(|&t| fmt(t)));
            row.extend(p.weights.iter().map(|&w| fmt(w)));
            row
        })
        .collect();
    (head, rows)
}

pub fn fit(cfg: &ExperimentConfig, mode: Option<FitMode>, out: &OutDir) -> Result<()> {
    let xs = observations(cfg, out)?;
    let mut chain_cfg: ChainConfig = cfg.chain();
    match mode {
        None => {}
        Some(FitMode::Empirical) => chain_cfg.prior.support = SupportMode::Empirical,
        Some(FitMode::Hierarchical) => chain_cfg.prior.support = SupportMode::Hierarchical,
        Some(FitMode::Fixed) if matches!(chain_cfg.prior.support, SupportMode::Fixed { .. }) => {}
        Some(FitMode::Fixed) => {
            let half = 2.3 * (xs.len().max(2) as f64).ln();
            chain_cfg.prior.support = SupportMode::Fixed {
                lower: -half,
                upper: half,
            };
        }
    }
    let chain = run_chain(&chain_cfg, &xs, cfg.seed)?;

    let (head, rows) = chain_rows(&chain);
    out.csv("chain.csv", &head, &rows)?;
    let mut evals = Vec::with_capacity(chain.len() * chain.grid.len());
    for (r, row) in chain.records.iter().zip(&chain.grid_evals) {
        for (x, f) in chain.grid.iter().zip(row) {
            evals.push(vec![r.iteration.to_string(), fmt(*x), fmt(*f)]);
        }
    }
    out.csv("grid_evals.csv", &header(&["iteration", "x", "density"]), &evals)?;

    let band = band_from_chain(&chain, 0.95)?;
    let band_rows: Vec<Vec<String>> = (0..band.grid.len())
        .map(|i| vec![fmt(band.grid[i]), fmt(band.mean[i]), fmt(band.lower[i]), fmt(band.upper[i])])
        .collect();
    out.csv("band.csv", &header(&["x", "mean", "lower", "upper"]), &band_rows)?;

    let hist = mode_marginal(&chain)?;
    let hist_rows: Vec<Vec<String>> = (0..hist.counts.len())
        .map(|i| vec![fmt(hist.breaks[i]), fmt(hist.breaks[i + 1]), hist.counts[i].to_string()])
        .collect();
    out.csv("modes.csv", &header(&["lower", "upper", "count"]), &hist_rows)?;

    let h = hellinger(&chain.posterior_mean()?, &cfg.truth, &HellingerOptions::default())?;
    out.json(
        "meta.json",
        &json!({
            "chain": chain.meta,
            "config": chain_cfg,
            "truth": cfg.truth,
            "posterior_mean_hellinger": h,
            "mode_median": hist.median(),
            "mode_sd": hist.sd(),
        }),
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Table1Output<'a> {
    table: CoverageTable,
    hits: Vec<Vec<u64>>,
    seed: u64,
    config: &'a ChainConfig,
}

pub fn table1(cfg: &ExperimentConfig, jobs: usize, out: &OutDir) -> Result<()> {
    let t = &cfg.table1;
    let chain_cfg = cfg.chain();
    let rows = t
        .n_values
        .iter()
        .map(|&n| coverage_experiment(&cfg.truth, &t.points, n, t.replications, &chain_cfg, cfg.seed, jobs))
        .collect::<Result<Vec<_>>>()?;
    let mut head = header(&["n"]);
    head.extend(t.points.iter().map(|&x| fmt(x)));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.n.to_string()];
            row.extend(r.frequencies.iter().map(|&f| fmt(f)));
            row
        })
        .collect();
    out.csv("table1.csv", &head, &csv_rows)?;
    out.json(
        "table1.json",
        &Table1Output {
            table: CoverageTable::from_rows(&rows)?,
            hits: rows.iter().map(|r| r.hits.clone()).collect(),
            seed: cfg.seed,
            config: &chain_cfg,
        },
    )?;
    Ok(())
}

pub fn mle(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    let xs = observations(cfg, out)?;
    let result = logconcave_mle(&xs, &cfg.mle)?;
    let h = hellinger_to_truth(&result, &cfg.truth, &HellingerOptions::default())?;
    let objective = mle_objective(&xs, &result.plf);
    out.json("mle.json", &result)?;
    out.csv(
        "mle_summary.csv",
        &header(&["n", "converged", "iterations", "objective", "projected_gradient", "hellinger"]),
        &[vec![
            xs.len().to_string(),
            result.converged.to_string(),
            result.iterations.to_string(),
            fmt(objective),
            fmt(result.projected_gradient),
            fmt(h),
        ]],
    )?;
    Ok(())
}

pub fn rate(cfg: &ExperimentConfig, jobs: usize, out: &OutDir) -> Result<()> {
    let fit = rate_diagnostic(&cfg.truth, &cfg.rate.n_values, cfg.rate.seeds, &cfg.chain(), cfg.seed, jobs)?;
    let mut rows = Vec::new();
    for (n, hs) in fit.n.iter().zip(&fit.hellinger) {
        for (s, h) in hs.iter().enumerate() {
            rows.push(vec![n.to_string(), s.to_string(), fmt(*h)]);
        }
    }
    out.csv("rate.csv", &header(&["n", "seed", "hellinger"]), &rows)?;
    let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
    out.csv(
        "rate_fit.csv",
        &header(&["slope", "standard_error", "degenerate"]),
        &[vec![opt(fit.slope), opt(fit.standard_error), fit.degenerate.to_string()]],
    )?;
    out.json("rate.json", &fit)?;
    Ok(())
}

pub fn approx(cfg: &ExperimentConfig, out: &OutDir) -> Result<()> {
    if !cfg.truth.is_log_concave() {
        return Err(Error::Data("the approximation needs a log-concave truth".into()));
    }
    let section = &cfg.approx;
    let constants = section.constants.unwrap_or_default();
    let interval = match section.interval {
        Some(iv) => iv,
        None => {
            let alpha = fit_envelope(&cfg.truth)?.alpha;
            let half = 8.0 * (section.n as f64).ln() / (5.0 * alpha);
            (-half, half)
        }
    };
    Support::new(interval.0, interval.1).map_err(|e| Error::Config(e.to_string()))?;
    let report = approximate_density(&cfg.truth, interval, section.n, &constants)?;
    let rows: Vec<Vec<String>> = report
        .plf
        .breakpoints()
        .iter()
        .zip(report.plf.values())
        .map(|(&x, &v)| vec![fmt(x), fmt(v)])
        .collect();
    out.csv("approx_plf.csv", &header(&["x", "log_density"]), &rows)?;
    out.json("approx.json", &report)?;
    Ok(())
}
