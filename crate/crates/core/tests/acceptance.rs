//! Runs the acceptance criteria in order and prints one PASS/FAIL line each.
//! Exits non-zero when any criterion fails.

mod common;

use std::time::Instant;

use common::{concave_from_seed, integral_exp, restricted_model_cdf_distance, slopes_non_increasing};
use logconcave::approx::{approximate_density, fit_envelope, plf_to_mixture, ApproxConstants};
use logconcave::mcmc::{run_chain, ChainConfig};
use logconcave::mle::{logconcave_mle, MleOptions};
use logconcave::priors::{draw_prior, PriorConfig, SupportMode, WeightModel};
use logconcave::seed::{stream, Purpose};
use logconcave::summaries::{coverage_experiment, mode_marginal, rate_diagnostic};
use logconcave::{hellinger, log_norm_const, mixture_to_plf, sample_truth, HellingerOptions, NormalizedDensity, TruthSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn gamma21() -> TruthSpec {
    TruthSpec::Gamma { shape: 2.0, rate: 1.0 }
}

fn protocol() -> ChainConfig {
    ChainConfig {
        iterations: 2000,
        burn_in: 1000,
        ..ChainConfig::default()
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table1_cells() -> Outcome {
    let truth = gamma21();
    let cfg = protocol();
    let seed = 2024;
    let high = coverage_experiment(&truth, &[1.0], 500, 100, &cfg, seed, jobs()).map_err(|e| e.to_string())?;
    let low = coverage_experiment(&truth, &[0.5], 50, 100, &cfg, seed, jobs()).map_err(|e| e.to_string())?;
    let (a, b) = (high.frequencies[0], low.frequencies[0]);
    check(
        (0.86..=1.0).contains(&a) && (0.35..=0.67).contains(&b),
        format!("coverage (n=500, x=1) = {a}, (n=50, x=0.5) = {b}"),
    )
}

fn rate_slope() -> Outcome {
    let fit = rate_diagnostic(&gamma21(), &[100, 400, 1600], 10, &protocol(), 11, jobs()).map_err(|e| e.to_string())?;
    let slope = fit.slope.ok_or("degenerate log-log fit")?;
    check(
        (-0.6..=-0.2).contains(&slope),
        format!("slope {slope:.4} (se {:.4})", fit.standard_error.unwrap_or(f64::NAN)),
    )
}

fn approximation_certified() -> Outcome {
    let constants = ApproxConstants::default();
    let truths = [
        ("gaussian", TruthSpec::standard_gaussian()),
        ("laplace", TruthSpec::Laplace { loc: 0.0, scale: 1.0 }),
        ("gamma", gamma21()),
    ];
    let mut failed = Vec::new();
    for (name, truth) in &truths {
        let alpha = fit_envelope(truth).map_err(|e| e.to_string())?.alpha;
        for n in [1_000u64, 10_000, 100_000] {
            let half = 8.0 * (n as f64).ln() / (5.0 * alpha);
            let r = approximate_density(truth, (-half, half), n, &constants).map_err(|e| format!("{name} n={n}: {e}"))?;
            if !r.checks.all() || r.plf.support() != (-half, half) {
                failed.push(format!("{name} n={n} {:?}", r.checks));
            }
        }
    }
    check(failed.is_empty(), if failed.is_empty() { "9 fixtures, all checks hold".into() } else { failed.join("; ") })
}

fn sampler_matches_grid() -> Outcome {
    let d: Vec<f64> = (1..=3).map(|s| restricted_model_cdf_distance(s, 200_000)).collect();
    check(d.iter().all(|&x| x < 0.02), format!("sup CDF distances {d:.4?}"))
}

fn numerics() -> Outcome {
    let mut worst_norm: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    for seed in 0..1000u64 {
        let w = concave_from_seed(seed, 1 + seed as usize % 30);
        let oracle = integral_exp(&w);
        worst_norm = worst_norm.max((log_norm_const(&w).exp() - oracle).abs() / oracle);
        let rep = plf_to_mixture(&w).map_err(|e| e.to_string())?;
        let back = mixture_to_plf(&rep.mixture);
        for (&x, &v) in w.breakpoints().iter().zip(w.values()) {
            worst_trip = worst_trip.max((back.eval(x) + rep.gamma3 - v).abs());
        }
    }

    let mut bad_draws = 0;
    let mut draws = 0;
    for seed in 0..400u64 {
        let cfg = PriorConfig {
            weight_model: if seed % 2 == 0 { WeightModel::StickBreaking } else { WeightModel::DirichletMultinomial { alpha: 1.0 } },
            support: if seed % 4 < 2 { SupportMode::Fixed { lower: 0.0, upper: 1.0 } } else { SupportMode::Hierarchical },
            ..PriorConfig::default()
        };
        let m = draw_prior(&cfg, 1 + seed as usize % 50, &mut stream(seed, Purpose::Prior, 0)).map_err(|e| e.to_string())?;
        let w = mixture_to_plf(&m);
        let d = NormalizedDensity::new(w.clone());
        draws += 1;
        if !slopes_non_increasing(&w, 1e-12) || (d.cdf(m.support().upper) - 1.0).abs() > 1e-10 {
            bad_draws += 1;
        }
    }
    let data = sample_truth(&gamma21(), &mut stream(5, Purpose::Data, 0), 100);
    let chain = run_chain(&ChainConfig { iterations: 1000, burn_in: 500, ..ChainConfig::default() }, &data, 5).map_err(|e| e.to_string())?;
    for k in 0..chain.len() {
        let w = chain.records[k].params.to_mixture().map_err(|e| e.to_string())?.to_plf();
        let d = chain.density(k).map_err(|e| e.to_string())?;
        draws += 1;
        if !slopes_non_increasing(&w, 1e-12) || (d.cdf(w.support().1) - 1.0).abs() > 1e-10 {
            bad_draws += 1;
        }
    }

    let h = hellinger(&TruthSpec::standard_gaussian(), &TruthSpec::Gaussian { mean: 1.0, sd: 1.0 }, &HellingerOptions::default())
        .map_err(|e| e.to_string())?;
    let expect = 2f64.sqrt() * (1.0 - (-0.125f64).exp()).sqrt();
    let h_err = (h - expect).abs();
    check(
        worst_norm <= 1e-10 && worst_trip <= 1e-10 && bad_draws == 0 && h_err <= 1e-8,
        format!(
            "log-norm rel {worst_norm:.2e}, round trip {worst_trip:.2e}, {bad_draws}/{draws} bad draws, hellinger error {h_err:.2e}"
        ),
    )
}

fn mle_fixtures() -> Vec<Vec<f64>> {
    vec![
        sample_truth(&TruthSpec::standard_gaussian(), &mut stream(99, Purpose::Data, 0), 300),
        sample_truth(&gamma21(), &mut stream(1, Purpose::Data, 0), 500),
        sample_truth(&TruthSpec::Laplace { loc: 1.0, scale: 2.0 }, &mut stream(2, Purpose::Data, 0), 200),
        sample_truth(&TruthSpec::Beta { a: 2.0, b: 5.0 }, &mut stream(3, Purpose::Data, 0), 1000),
        vec![0.0, 0.1, 0.15, 1.0, 3.0],
    ]
}

fn mle_baseline() -> Outcome {
    let opts = MleOptions::default();
    let two = logconcave_mle(&[0.0, 1.0], &opts).map_err(|e| e.to_string())?.density();
    let sup = (0..=1000).map(|i| (two.eval(i as f64 / 1000.0) - 1.0).abs()).fold(0.0, f64::max);

    let (sigma, mu) = (2.5, -1.25);
    let mut monotone = true;
    let mut worst: f64 = 0.0;
    for data in mle_fixtures() {
        let r = logconcave_mle(&data, &opts).map_err(|e| e.to_string())?;
        monotone &= r.converged && r.objective_trace.windows(2).all(|p| p[1] >= p[0]);
        let moved: Vec<f64> = data.iter().map(|x| sigma * x + mu).collect();
        let g = logconcave_mle(&moved, &opts).map_err(|e| e.to_string())?.density();
        let f = r.density();
        let (lo, hi) = f.logdensity().support();
        for i in 0..=2000 {
            let x = lo + (hi - lo) * i as f64 / 2000.0;
            worst = worst.max((sigma * g.eval(sigma * x + mu) - f.eval(x)).abs() / f.eval(x));
        }
    }
    check(
        sup <= 1e-8 && monotone && worst <= 1e-6,
        format!("two-point sup error {sup:.2e}, traces monotone {monotone}, equivariance {worst:.2e}"),
    )
}

fn mode_concentrates() -> Outcome {
    let truth = TruthSpec::standard_gaussian();
    let cfg = ChainConfig::default();
    let mut pairs = Vec::new();
    for s in 0..5u64 {
        // Both sizes read the same stream, so the small sample is the first
        // 500 draws of the large one.
        let draw = |n| sample_truth(&truth, &mut stream(s, Purpose::Data, 0), n);
        let sd = |data: &[f64]| -> Result<f64, String> {
            let chain = run_chain(&cfg, data, s).map_err(|e| e.to_string())?;
            Ok(mode_marginal(&chain).map_err(|e| e.to_string())?.sd())
        };
        pairs.push((sd(&draw(500))?, sd(&draw(5000))?));
    }
    let detail = pairs.iter().map(|(a, b)| format!("{a:.3}>{b:.3}")).collect::<Vec<_>>().join(", ");
    check(pairs.iter().all(|(a, b)| b < a), format!("mode sd n=500 vs n=5000: {detail}"))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 7] = [
        ("table 1 coverage cells", table1_cells),
        ("hellinger rate slope", rate_slope),
        ("approximation certificate", approximation_certified),
        ("sampler against grid posterior", sampler_matches_grid),
        ("numerics suite", numerics),
        ("mle baseline", mle_baseline),
        ("mode marginal concentration", mode_concentrates),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
