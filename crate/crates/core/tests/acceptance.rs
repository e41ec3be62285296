//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the test harness so every line is printed. The process
//! exits 0 even when a criterion fails unless `ACCEPTANCE_STRICT=1`;
//! `ACCEPTANCE_ONLY=3,5` restricts the run to the listed criteria.

mod common;

use common::{wiener_variance_oracle, OracleMeasure};
use cvar_evt::amse_bootstrap::{estimate_r, AlgorithmParams, CalibrationConfig};
use cvar_evt::asymptotics::{asymptotic_bias, asymptotic_variance};
use cvar_evt::core_stats::cvar_from_raw;
use cvar_evt::distributions::{sample_stream, DistributionSpec};
use cvar_evt::estimators::{
    estimate, estimate_cvar_smoothed, estimate_pickands_yun, EstimatorConfig,
};
use cvar_evt::evt_kernels::{big_h, delta_c_tol, h_tilde_gamma, Kernel, TailContext};
use cvar_evt::experiments::{run_experiment, EstimatorSpec, ExperimentSpec};
use cvar_evt::measures::{
    integrate_against, validate_lambda, SmoothingMeasure, ALPHA_MAX, ALPHA_MIN, BETA_MAX, BETA_MIN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn random_beta(rng: &mut ChaCha8Rng) -> SmoothingMeasure {
    SmoothingMeasure::beta(rng.random_range(ALPHA_MIN..=ALPHA_MAX), rng.random_range(BETA_MIN..=BETA_MAX)).unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn lambda_conditions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..50 {
        let m = random_beta(&mut rng);
        let r = validate_lambda(&m);
        ok &= r.mass_zero.passed && r.mass_zero.residual == 0.0 && r.abs_log_moment_finite.passed;
        ok &= r.log_moment.residual <= 1e-8;
        worst = worst.max(r.log_moment.residual);
    }
    verdict(ok, format!("worst |log moment - 1| = {worst:.2e}"))
}

fn invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = 500;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powf(-0.2) + rng.random::<f64>()).collect();
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(0.5..3.0));
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let m = 4 * rng.random_range(5..=30);
        let measure = random_beta(&mut rng);
        let config = match i % 3 {
            0 => EstimatorConfig::cvar_smoothed(0.75, m, measure),
            1 => EstimatorConfig::var_smoothed(0.75, m, measure),
            _ => EstimatorConfig::pickands_yun(2.0, 2.0, m),
        };
        let run = |s: &[f64]| {
            let (o, c) = cvar_from_raw(s).unwrap();
            estimate(&config, &o, &c).unwrap().gamma
        };
        let (g1, g2) = (run(&xs), run(&ys));
        worst = worst.max((g1 - g2).abs() / g1.abs().max(1e-300));
    }
    verdict(worst <= 1e-10, format!("worst relative difference {worst:.2e}"))
}

fn yun_special_case() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..20 {
        let xs: Vec<f64> = (0..300).map(|_| rng.random::<f64>().powf(-0.3)).collect();
        let (_, y) = cvar_from_raw(&xs).unwrap();
        for m in (4..=64).step_by(4) {
            let cfg = EstimatorConfig::cvar_smoothed(0.5, m, SmoothingMeasure::point(0.5).unwrap());
            let smoothed = estimate_cvar_smoothed(&y, &cfg).unwrap();
            let yun = estimate_pickands_yun(&y, 0.5, 0.5, m).unwrap();
            checked += 1;
            if smoothed.to_bits() != yun.to_bits() {
                mismatches += 1;
            }
        }
    }
    verdict(mismatches == 0, format!("{mismatches} bitwise mismatches in {checked} comparisons"))
}

fn bias_by_delta_route(g: f64, r: f64, c: f64, m: &SmoothingMeasure) -> f64 {
    let ht = h_tilde_gamma(g, c).unwrap();
    integrate_against(m, |t| {
        let scale = 1.0 + big_h(g, r, t).unwrap().abs();
        let f = |x: f64| if x > 0.0 { big_h(g, r, x).unwrap() } else { 0.0 };
        t.powf(g) * delta_c_tol(f, c, t, 1e-11 * scale).unwrap() / ht
    })
    .unwrap()
}

fn bias_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_unit: f64 = 0.0;
    for _ in 0..20 {
        let m = random_beta(&mut rng);
        let g = rng.random_range(-1.0..0.45);
        let ctx = TailContext::new(g, 0.0, 0.75).unwrap();
        for kernel in [Kernel::Cvar, Kernel::Var] {
            worst_unit = worst_unit.max((asymptotic_bias(&ctx, &m, kernel).unwrap() - 1.0).abs());
        }
    }
    let m = SmoothingMeasure::beta(2.5, 3.0).unwrap();
    let mut worst_route: f64 = 0.0;
    for &g in &[-0.2, 0.0, 0.25, 0.45] {
        for &r in &[-2.0, -1.0, -0.5] {
            for &c in &[0.6, 0.75, 0.9] {
                let closed = asymptotic_bias(&TailContext::new(g, r, c).unwrap(), &m, Kernel::Cvar).unwrap();
                worst_route = worst_route.max((closed - bias_by_delta_route(g, r, c, &m)).abs());
            }
        }
    }
    verdict(
        worst_unit <= 1e-10 && worst_route <= 1e-7,
        format!("|B(rho=0) - 1| <= {worst_unit:.1e}, two-route gap {worst_route:.1e}"),
    )
}

fn asymptotic_normality() -> Verdict {
    let (gamma, n, m, reps) = (0.25, 10_000, 1000, 1000);
    let dist = DistributionSpec::gpd(gamma).unwrap();
    let measure = SmoothingMeasure::beta(2.0, 2.0).unwrap();
    let cfg = EstimatorConfig::cvar_smoothed(0.75, m, measure.clone());
    let z: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let xs = sample_stream(&dist, n, 505, rep as u64);
            let (_, y) = cvar_from_raw(&xs).unwrap();
            (m as f64).sqrt() * (estimate_cvar_smoothed(&y, &cfg).unwrap() - gamma)
        })
        .collect();
    let mean = z.iter().sum::<f64>() / reps as f64;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let v = asymptotic_variance(&TailContext::new(gamma, -1.0, 0.75).unwrap(), &measure, Kernel::Cvar).unwrap();
    let ratio = var / v;
    verdict(
        (ratio - 1.0).abs() <= 0.15 && mean.abs() <= 0.1 * v.sqrt(),
        format!("variance {var:.4} vs {v:.4} (ratio {ratio:.3}), mean {mean:.4} vs bound {:.4}", 0.1 * v.sqrt()),
    )
}

fn variance_oracle() -> Verdict {
    let gammas = [0.0, 0.25];
    let beta22: fn(f64) -> f64 = |t| 2.0 * t * (1.0 - t);
    let point = SmoothingMeasure::point(0.5).unwrap();
    let measures = [OracleMeasure::Cumulative(beta22), OracleMeasure::Atoms(point.atoms())];
    let lib = [SmoothingMeasure::beta(2.0, 2.0).unwrap(), point];
    let oracle = wiener_variance_oracle(&gammas, 0.75, &measures, 100_000, 16, 606);
    let mut worst: f64 = 0.0;
    for (gi, &g) in gammas.iter().enumerate() {
        let ctx = TailContext::new(g, -1.0, 0.75).unwrap();
        for (ki, kernel) in [Kernel::Cvar, Kernel::Var].into_iter().enumerate() {
            for (mi, m) in lib.iter().enumerate() {
                let v = asymptotic_variance(&ctx, m, kernel).unwrap();
                worst = worst.max((oracle[gi][ki][mi] / v - 1.0).abs());
            }
        }
    }
    verdict(worst <= 0.02, format!("worst relative gap {:.2}%", 100.0 * worst))
}

fn experiment(dist: DistributionSpec, estimators: Vec<EstimatorSpec>) -> cvar_evt::experiments::CurveResult {
    let spec = ExperimentSpec {
        reps: 200,
        estimators,
        ..ExperimentSpec::new(dist)
    };
    run_experiment(&spec).unwrap()
}

fn burr_shapes() -> Verdict {
    let [pickands, cvar, var] = ["cvar_pickands", "cvar_regmse", "var_regmse"].map(|s| s.parse::<EstimatorSpec>().unwrap());
    let res = experiment(DistributionSpec::burr(2.0, 2.0).unwrap(), vec![pickands.clone(), cvar.clone(), var.clone()]);
    let mse = |e: &EstimatorSpec, k: usize| res.row(&e.to_string(), k).unwrap().mse;
    let a = mse(&cvar, 1000) / mse(&cvar, 300);
    let min_p = res.curve(&pickands.to_string()).iter().map(|r| r.mse).fold(f64::INFINITY, f64::min);
    let b = mse(&pickands, 1000) / min_p;
    let ranks: Vec<(usize, f64, f64)> = [600, 800, 1000].iter().map(|&k| (k, mse(&cvar, k), mse(&var, k))).collect();
    let c_ok = ranks.iter().all(|r| r.1 <= r.2);
    let (a_ok, b_ok) = (a <= 2.0, b >= 3.0);
    let tag = |ok: bool| if ok { "ok" } else { "fails" };
    let ranking: Vec<String> = ranks.iter().map(|r| format!("k={} {:.5}/{:.5}", r.0, r.1, r.2)).collect();
    verdict(
        a_ok && b_ok && c_ok,
        format!(
            "(a) {} ratio {a:.2}; (b) {} ratio {b:.2}; (c) {} cvar/var {}",
            tag(a_ok),
            tag(b_ok),
            tag(c_ok),
            ranking.join(", ")
        ),
    )
}

fn gpd_contrast() -> Verdict {
    let [cvar, var] = ["cvar_regmse", "var_regmse"].map(|s| s.parse::<EstimatorSpec>().unwrap());
    let res = experiment(DistributionSpec::gpd(0.25).unwrap(), vec![cvar.clone(), var.clone()]);
    let c = res.row(&cvar.to_string(), 1000).unwrap().mse;
    let v = res.row(&var.to_string(), 1000).unwrap().mse;
    let ratio = c.max(v) / c.min(v);
    verdict(ratio <= 3.0, format!("MSE at k=1000: cvar {c:.5}, var {v:.5}, ratio {ratio:.2}"))
}

fn algorithm_sanity() -> Verdict {
    let params = AlgorithmParams {
        b: 200,
        ..AlgorithmParams::default()
    };
    let dist = DistributionSpec::gpd(0.25).unwrap();
    let results: Vec<(f64, bool)> = (0..20u64)
        .map(|seed| {
            let xs = sample_stream(&dist, 1000, 909 + seed, 0);
            let cfg = CalibrationConfig::new(0.75, -1.0, params, seed);
            let path = estimate_r(&xs, 300, &cfg).unwrap();
            (path.terminal(), path.check_continuity(&params).is_ok())
        })
        .collect();
    let med = median(results.iter().map(|r| r.0).collect());
    let mut sorted: Vec<f64> = results.iter().map(|r| r.0).collect();
    sorted.sort_by(f64::total_cmp);
    let continuous = results.iter().all(|r| r.1);
    verdict(
        med <= 1.0 && continuous,
        format!(
            "median terminal r = {med:.2} (quartiles {:.1}/{:.1}), continuity {}",
            sorted[4],
            sorted[15],
            if continuous { "holds" } else { "violated" }
        ),
    )
}

fn consistency() -> Verdict {
    let cfg = EstimatorConfig::cvar_smoothed(0.75, 5000, SmoothingMeasure::beta(2.0, 2.0).unwrap());
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, &g) in [-0.2, 0.0, 0.25].iter().enumerate() {
        let dist = DistributionSpec::gpd(g).unwrap();
        let est: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|rep| {
                let xs = sample_stream(&dist, 100_000, 1010 + i as u64, rep);
                let (_, y) = cvar_from_raw(&xs).unwrap();
                estimate_cvar_smoothed(&y, &cfg).unwrap()
            })
            .collect();
        let err = (median(est) - g).abs();
        worst = worst.max(err);
        parts.push(format!("gamma={g}: {err:.4}"));
    }
    verdict(worst <= 0.02, format!("|median - gamma| {}", parts.join(", ")))
}

type Criterion = (usize, &'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "lambda conditions", Duration::from_secs(10), lambda_conditions),
        (2, "location/scale invariance", Duration::from_secs(30), invariance),
        (3, "point measure equals Yun form", Duration::MAX, yun_special_case),
        (4, "bias identities", Duration::from_secs(120), bias_identities),
        (5, "asymptotic normality", Duration::from_secs(300), asymptotic_normality),
        (6, "variance vs Wiener oracle", Duration::from_secs(600), variance_oracle),
        (7, "Burr figure shapes", Duration::from_secs(1200), burr_shapes),
        (8, "GPD contrast", Duration::from_secs(1200), gpd_contrast),
        (9, "calibration sanity", Duration::from_secs(900), algorithm_sanity),
        (10, "consistency", Duration::from_secs(300), consistency),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let in_time = took <= budget;
        let passed = v.passed && in_time;
        ran += 1;
        if !passed {
            failed += 1;
        }
        let budget_note = if in_time { String::new() } else { format!(", over the {}s budget", budget.as_secs()) };
        println!(
            "{} {id:>2} {name}: {} ({:.1}s{budget_note})",
            if passed { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} passed", ran - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
