use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use logconcave::cli::ExperimentConfig;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_logconcave"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against a golden file; `UPDATE_GOLDEN=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

const GAMMA_SMALL: &str = r#"{
  "schema_version": 1,
  "truth": {"family": "gamma", "shape": 2.0, "rate": 1.0},
  "n": 40,
  "iterations": 200,
  "burn_in": 100,
  "grid_size": 16,
  "seed": 3,
  "prior": {"truncation": 3},
  "table1": {"n_values": [30, 40], "replications": 1},
  "rate": {"n_values": [20, 40, 80], "seeds": 2},
  "approx": {"n": 10000}
}"#;

#[test]
fn csv_layouts_are_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAMMA_SMALL);
    let out = dir.path().join("out");
    let mut layouts = String::new();
    for sub in ["fit", "table1", "mle", "rate", "approx"] {
        ok(&run(sub, &cfg, &out, &["--jobs", "2"]));
    }
    let fig = write_config(
        dir.path(),
        "f.json",
        r#"{"schema_version": 1, "truth": {"family": "uniform", "lower": 0, "upper": 1},
            "prior": {"support": {"mode": "fixed", "lower": 0, "upper": 1}, "truncation": 3}, "grid_size": 8}"#,
    );
    ok(&run("sample-prior", &fig, &out, &[]));
    let mut names: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for name in &names {
        if name.ends_with(".csv") {
            layouts.push_str(&format!("{name}: {}\n", header(&out.join(name))));
        } else {
            layouts.push_str(&format!("{name}\n"));
        }
    }
    assert_golden("layouts.txt", &layouts);
}

#[test]
fn config_schema_is_frozen() {
    let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "truth": {"family": "gaussian", "mean": 0, "sd": 1}}"#).unwrap();
    let mut text = serde_json::to_string_pretty(&cfg).unwrap();
    text.push('\n');
    assert_golden("config_defaults.json", &text);
    // the defaults file is itself a valid config
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAMMA_SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for sub in ["sample-prior", "fit", "table1"] {
        let cfg = if sub == "sample-prior" {
            write_config(
                dir.path(),
                "p.json",
                r#"{"schema_version": 1, "truth": {"family": "uniform", "lower": 0, "upper": 1},
                    "prior": {"support": {"mode": "fixed", "lower": 0, "upper": 1}}}"#,
            )
        } else {
            cfg.clone()
        };
        ok(&run(sub, &cfg, &a, &["--jobs", "1"]));
        ok(&run(sub, &cfg, &b, &["--jobs", "3"]));
    }
    let mut files: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert!(files.len() >= 10);
    for f in files {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f:?} differs");
    }
    // rerunning into the same directory replaces the files in place
    ok(&run("fit", &cfg, &a, &[]));
    assert_eq!(fs::read(a.join("chain.csv")).unwrap(), fs::read(b.join("chain.csv")).unwrap());
    // a different seed changes the chain
    ok(&run("fit", &cfg, &b, &["--seed", "4"]));
    assert_ne!(fs::read(a.join("chain.csv")).unwrap(), fs::read(b.join("chain.csv")).unwrap());
}

#[test]
fn prior_curves_integrate_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"schema_version": 1, "truth": {"family": "uniform", "lower": 0, "upper": 1},
            "prior": {"support": {"mode": "fixed", "lower": 0, "upper": 1}}, "grid_size": 4001, "seed": 1}"#,
    );
    let out = dir.path().join("o");
    ok(&run("sample-prior", &cfg, &out, &[]));
    let text = fs::read_to_string(out.join("prior_draws.csv")).unwrap();
    let mut curves: Vec<Vec<(f64, f64)>> = vec![Vec::new(); 5];
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        curves[f[0].parse::<usize>().unwrap()].push((f[1].parse().unwrap(), f[2].parse().unwrap()));
    }
    let draws: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("prior_draws.json")).unwrap()).unwrap();
    for (k, c) in curves.iter().enumerate() {
        assert_eq!(c.len(), 4001);
        // integrate exp of the piecewise linear log-density exactly between
        // grid points is not possible from values alone; the curve is known
        // in closed form from the JSON parameters instead.
        let p: logconcave::priors::Params = serde_json::from_value(draws["draws"][k].clone()).unwrap();
        let d = logconcave::NormalizedDensity::new(p.to_mixture().unwrap().to_plf());
        for &(x, fx) in c {
            assert!((d.eval(x) - fx).abs() <= 1e-12 * (1.0 + fx));
        }
        assert!((d.cdf(1.0) - 1.0).abs() < 1e-8);
        let total: f64 = c.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        assert!((total - 1.0).abs() < 1e-3, "draw {k}: trapezoid {total}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let unknown = write_config(dir.path(), "u.json", r#"{"schema_version": 1, "truth": {"family": "uniform", "lower": 0, "upper": 1}, "iters": 3}"#);
    let o = run("fit", &unknown, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("iters"));
    let broken = write_config(dir.path(), "b.json", "{\"schema_version\": 1,\n  \"truth\": }");
    let o = run("mle", &broken, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(run("mle", &dir.path().join("missing.json"), &out, &[]).status.code(), Some(2));

    fs::write(dir.path().join("d.csv"), "x\n0.05\n0.5\n").unwrap();
    let data = dir.path().join("d.csv");
    let fixed = write_config(
        dir.path(),
        "fx.json",
        &format!(
            r#"{{"schema_version": 1, "truth": {{"family": "uniform", "lower": 0, "upper": 1}}, "data": {:?},
                "prior": {{"support": {{"mode": "fixed", "lower": 0, "upper": 0.1}}}}, "iterations": 20, "burn_in": 10}}"#,
            data
        ),
    );
    let o = run("fit", &fixed, &out, &["--mode", "fixed"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.5"));

    fs::write(dir.path().join("bad.csv"), "x\n0.1\nabc\n").unwrap();
    let bad = write_config(
        dir.path(),
        "bd.json",
        &format!(r#"{{"schema_version": 1, "truth": {{"family": "uniform", "lower": 0, "upper": 1}}, "data": {:?}}}"#, dir.path().join("bad.csv")),
    );
    let o = run("mle", &bad, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));

    let mix = write_config(
        dir.path(),
        "m.json",
        r#"{"schema_version": 1, "truth": {"family": "mixture2", "weight": 0.5,
            "first": {"family": "gaussian", "mean": -3, "sd": 0.5}, "second": {"family": "gaussian", "mean": 3, "sd": 0.5}}}"#,
    );
    assert_eq!(run("approx", &mix, &out, &[]).status.code(), Some(3));

    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("fit").output().unwrap().status.code(), Some(2));
}

#[test]
fn fixed_mode_default_support() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAMMA_SMALL);
    let out = dir.path().join("o");
    ok(&run("fit", &cfg, &out, &["--mode", "fixed"]));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    let half = 2.3 * 40f64.ln();
    assert_eq!(meta["config"]["prior"]["support"]["mode"], "fixed");
    assert!((meta["config"]["prior"]["support"]["lower"].as_f64().unwrap() + half).abs() < 1e-12);
    assert!((meta["config"]["prior"]["support"]["upper"].as_f64().unwrap() - half).abs() < 1e-12);
    for mode in ["empirical", "hierarchical"] {
        ok(&run("fit", &cfg, &out, &["--mode", mode]));
    }
}

#[test]
fn smoke_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", GAMMA_SMALL);
    let out = dir.path().join("o");
    ok(&run("table1", &cfg, &out, &[]));
    let table = fs::read_to_string(out.join("table1.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "n,0.5,1,1.5,2,2.5,3");
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        for cell in row.split(',').skip(1) {
            assert!(cell == "0" || cell == "1", "{cell}");
        }
    }

    ok(&run("approx", &cfg, &out, &[]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("approx.json")).unwrap()).unwrap();
    for (k, v) in report["checks"].as_object().unwrap() {
        assert_eq!(v, &serde_json::Value::Bool(true), "check {k}");
    }

    fs::write(dir.path().join("two.csv"), "x\n1\n3\n").unwrap();
    let two = write_config(
        dir.path(),
        "two.json",
        &format!(r#"{{"schema_version": 1, "truth": {{"family": "uniform", "lower": 1, "upper": 3}}, "data": {:?}}}"#, dir.path().join("two.csv")),
    );
    ok(&run("mle", &two, &out, &[]));
    let mle: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("mle.json")).unwrap()).unwrap();
    let bp: Vec<f64> = serde_json::from_value(mle["plf"]["breakpoints"].clone()).unwrap();
    let vals: Vec<f64> = serde_json::from_value(mle["plf"]["values"].clone()).unwrap();
    assert_eq!(bp, vec![1.0, 3.0]);
    for v in vals {
        assert!((v - 0.5f64.ln()).abs() < 1e-8);
    }
}
