mod common;

use logconcave::seed::{stream, Purpose};
use logconcave::{eval_truth, sample_truth, TruthSpec};

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (mean, m2, m4)
}

fn check_moments(spec: &TruthSpec, mean: f64, var: f64, seed: u64) {
    let xs = sample_truth(spec, &mut stream(seed, Purpose::Data, 0), 1_000_000);
    assert!(xs.windows(2).all(|p| p[0] <= p[1]));
    assert!(xs.iter().all(|x| x.is_finite()));
    let n = xs.len() as f64;
    let (m, v, m4) = moments(&xs);
    let se_mean = (var / n).sqrt();
    let se_var = ((m4 - v * v) / n).sqrt();
    assert!((m - mean).abs() < 3.0 * se_mean, "{spec:?}: mean {m} vs {mean}");
    assert!((v - var).abs() < 3.0 * se_var, "{spec:?}: variance {v} vs {var}");
}

#[test]
fn sampler_moments() {
    check_moments(&TruthSpec::Gamma { shape: 2.0, rate: 1.0 }, 2.0, 2.0, 1);
    check_moments(&TruthSpec::Gaussian { mean: -1.0, sd: 2.0 }, -1.0, 4.0, 2);
    check_moments(&TruthSpec::Beta { a: 2.0, b: 3.0 }, 0.4, 6.0 / (25.0 * 6.0), 3);
    check_moments(&TruthSpec::Laplace { loc: 0.5, scale: 1.5 }, 0.5, 2.0 * 2.25, 4);
    check_moments(&TruthSpec::Uniform { lower: -1.0, upper: 3.0 }, 1.0, 16.0 / 12.0, 5);
    let mix = TruthSpec::Mixture2 {
        weight: 0.5,
        first: Box::new(TruthSpec::Gaussian { mean: 1.0, sd: 1.0 }),
        second: Box::new(TruthSpec::Gaussian { mean: 4.0, sd: 0.5 }),
    };
    // 0.5 (1 + 1) + 0.5 (16 + 0.25) - 2.5^2
    check_moments(&mix, 2.5, 0.5 * 2.0 + 0.5 * 16.25 - 6.25, 6);
}

#[test]
fn closed_form_densities() {
    assert!((eval_truth(&TruthSpec::Gamma { shape: 2.0, rate: 1.0 }, 1.0) - 0.367879).abs() < 1e-6);
    assert_eq!(eval_truth(&TruthSpec::Laplace { loc: 0.0, scale: 1.0 }, 0.0), 0.5);
    assert!((TruthSpec::Beta { a: 2.0, b: 3.0 }.mode() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(eval_truth(&TruthSpec::Uniform { lower: 0.0, upper: 2.0 }, 3.0), 0.0);
    for spec in [
        TruthSpec::standard_gaussian(),
        TruthSpec::Gamma { shape: 3.0, rate: 2.0 },
        TruthSpec::Beta { a: 2.0, b: 5.0 },
        TruthSpec::Laplace { loc: 1.0, scale: 0.5 },
    ] {
        let (lo, hi) = spec.effective_support();
        let h = (hi - lo) / 64.0;
        let mass: f64 = (0..64)
            .map(|i| common::simpson(&|x| spec.pdf(x), lo + i as f64 * h, lo + (i + 1) as f64 * h, 1e-13))
            .sum();
        assert!((mass - 1.0).abs() < 1e-6, "{spec:?}: {mass}");
    }
}

#[test]
fn log_concavity_audit() {
    for spec in [
        TruthSpec::standard_gaussian(),
        TruthSpec::Gaussian { mean: 3.0, sd: 0.2 },
        TruthSpec::Gamma { shape: 1.0, rate: 1.0 },
        TruthSpec::Gamma { shape: 2.0, rate: 1.0 },
        TruthSpec::Beta { a: 1.0, b: 1.0 },
        TruthSpec::Beta { a: 2.0, b: 3.0 },
        TruthSpec::Laplace { loc: 0.0, scale: 1.0 },
        TruthSpec::Uniform { lower: 0.0, upper: 1.0 },
    ] {
        assert!(spec.is_log_concave());
        let (lo, hi) = spec.effective_support();
        let k = 10_000;
        let h = (hi - lo) / (k + 1) as f64;
        let l: Vec<f64> = (1..=k).map(|i| spec.ln_pdf(lo + i as f64 * h)).collect();
        for i in 1..k - 1 {
            let d2 = l[i + 1] - 2.0 * l[i] + l[i - 1];
            assert!(d2 <= 1e-9 * (1.0 + l[i].abs()), "{spec:?} at {}: {d2}", lo + (i + 1) as f64 * h);
        }
    }
}

#[test]
fn samples_are_reproducible() {
    let u = TruthSpec::Uniform { lower: 0.0, upper: 1.0 };
    let a = sample_truth(&u, &mut stream(9, Purpose::Data, 0), 3);
    assert_eq!(a, sample_truth(&u, &mut stream(9, Purpose::Data, 0), 3));
    assert_ne!(a, sample_truth(&u, &mut stream(9, Purpose::Data, 1), 3));
    assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
}
