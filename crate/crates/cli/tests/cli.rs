use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn elecmarket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elecmarket"))
        .args(args)
        .env("RUST_LOG", "error")
        .env_remove("ELECMARKET_OUT")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = elecmarket(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn toy() -> String {
    fixtures().join("toy.toml").display().to_string()
}

/// The toy scenario copied into `dir` so it can be edited.
fn copy_toy(dir: &Path) -> PathBuf {
    let fx = fixtures();
    fs::create_dir_all(dir.join("toy")).unwrap();
    for entry in fs::read_dir(fx.join("toy")).unwrap() {
        let p = entry.unwrap().path();
        fs::copy(&p, dir.join("toy").join(p.file_name().unwrap())).unwrap();
    }
    fs::copy(fx.join("synthetic_365.csv"), dir.join("synthetic_365.csv")).unwrap();
    fs::copy(fx.join("toy.toml"), dir.join("toy.toml")).unwrap();
    dir.join("toy.toml")
}

#[test]
fn eighteen_year_horizon_with_demand_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    ok(&[
        "--config",
        &toy(),
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
        "--override",
        "horizon_yr=18",
        "--override",
        "demand_growth_per_yr=0.01",
        "simulate",
    ]);
    let mut r = csv::Reader::from_path(out.join("mix_shares.csv")).unwrap();
    let years: Vec<i32> = r.records().map(|row| row.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(years, (2018..=2035).collect::<Vec<_>>());
    let mut r = csv::Reader::from_path(out.join("years.csv")).unwrap();
    let demand: Vec<f64> = r.records().map(|row| row.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(demand.len(), 18);
    assert!((demand[17] / demand[0] - 1.01f64.powi(17)).abs() < 1e-9);
    let m = manifest(&out);
    assert_eq!(m["overrides"][0], "horizon_yr=18");
}

#[test]
fn unknown_fuel_is_named_with_its_plant() {
    let tmp = tempfile::tempdir().unwrap();
    let config = copy_toy(tmp.path());
    let text = fs::read_to_string(&config)
        .unwrap()
        .replacen("fuel = \"gas\"", "fuel = \"oil\"", 1);
    fs::write(&config, text).unwrap();
    let out = elecmarket(&[
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
        "simulate",
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("new-ccgt") && err.contains("oil"), "{err}");
}

#[test]
fn schema_violations_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = elecmarket(&[
        "--config",
        &toy(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--override",
        "stochastic.wacc=sometimes",
        "simulate",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stochastic.wacc"));
}

#[test]
fn seed_sources_are_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    ok(&[
        "--config",
        &toy(),
        "--out",
        a.to_str().unwrap(),
        "--seed",
        "17",
        "simulate",
    ]);
    ok(&[
        "--config",
        &toy(),
        "--out",
        b.to_str().unwrap(),
        "--override",
        "seed=23",
        "simulate",
    ]);
    ok(&["--config", &toy(), "--out", c.to_str().unwrap(), "simulate"]);
    let (ma, mb, mc) = (manifest(&a), manifest(&b), manifest(&c));
    assert_eq!(
        (ma["seed"].as_u64(), ma["seed_source"].as_str()),
        (Some(17), Some("flag"))
    );
    assert_eq!(
        (mb["seed"].as_u64(), mb["seed_source"].as_str()),
        (Some(23), Some("config"))
    );
    assert_eq!(mc["seed_source"], "generated");
    assert!(mc["seed"].is_u64());
    let config = fs::read(fixtures().join("toy.toml")).unwrap();
    let digest = format!("{:x}", <sha2::Sha256 as sha2::Digest>::digest(&config));
    assert_eq!(ma["config_sha256"], digest.as_str());
    assert_eq!(ma["version"], env!("CARGO_PKG_VERSION"));
    let listed: Vec<&str> = ma["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert!(listed.contains(&"mix.csv") && listed.contains(&"clearing.csv") && listed.contains(&"investments.csv"));
}

#[test]
fn resuming_a_carbon_search_matches_one_long_run() {
    let tmp = tempfile::tempdir().unwrap();
    let (whole, split) = (tmp.path().join("whole"), tmp.path().join("split"));
    let config = toy();
    let run = |out: &Path, generations: &str, resume: bool| {
        let out = out.display().to_string();
        let mut args = vec![
            "--config",
            &config,
            "--seed",
            "8",
            "--out",
            &out,
            "optimize-carbon",
            "--pop",
            "6",
            "--generations",
            generations,
        ];
        if resume {
            args.push("--resume");
        }
        ok(&args);
    };
    run(&whole, "4", false);
    run(&split, "2", false);
    run(&split, "4", true);
    for f in ["archive.csv", "pareto.csv", "hypervolume.csv"] {
        assert_eq!(
            fs::read(whole.join(f)).unwrap(),
            fs::read(split.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn simulate_checkpoint_must_match_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    ok(&[
        "--config",
        &toy(),
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
        "simulate",
    ]);
    let first = fs::read(out.join("clearing.csv")).unwrap();
    ok(&[
        "--config",
        &toy(),
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
        "simulate",
        "--resume",
    ]);
    assert_eq!(first, fs::read(out.join("clearing.csv")).unwrap());
    let clash = elecmarket(&[
        "--config",
        &toy(),
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
        "simulate",
        "--resume",
    ]);
    assert!(!clash.status.success());
    assert!(String::from_utf8_lossy(&clash.stderr).contains("checkpoint"));
}

#[test]
fn out_defaults_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("f.csv");
    fs::write(&input, "actual,predicted\n0,1\n2,2\n").unwrap();
    let dir = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_elecmarket"))
        .args(["metrics", "--input", input.to_str().unwrap()])
        .env("ELECMARKET_OUT", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = fs::read_to_string(dir.join("forecast_metrics.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "metric,value,note");
    assert!(lines[1].starts_with("mape,,"), "{}", lines[1]);
    assert!(lines[2].starts_with("rmse,0.7071067811865476"), "{}", lines[2]);
    assert!(lines[3].starts_with("mase,,"), "{}", lines[3]);
}

#[test]
fn monte_carlo_runs_get_their_own_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mc");
    ok(&[
        "--config",
        &toy(),
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--override",
        "stochastic.fuel_noise=true",
        "simulate",
        "--runs",
        "3",
    ]);
    for i in 0..3 {
        assert!(out.join(format!("run-{i:03}")).join("mix.csv").exists());
    }
    let text = fs::read_to_string(out.join("monte_carlo_spread.csv")).unwrap();
    let std_price: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(std_price.len(), 3);
    assert!(std_price.iter().all(|s| *s > 0.0));
}
