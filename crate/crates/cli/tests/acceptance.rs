//! Acceptance suite: one PASS/FAIL line per criterion. With
//! `KINBM_ACCEPTANCE_STRICT=1` a failing gating criterion makes the run
//! exit non-zero. Criterion 10 is a diagnostic and never fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use kinbm::data_io::fixtures::{
    pricing_categories, published_distribution, published_pareto_regression,
    published_pricing_model,
};
use kinbm::data_io::{count_data, simulate_portfolio, CovariateLaw, PortfolioSpec};
use kinbm::distributions::{stream_rng, KinbmParams};
use kinbm::model_selection::{lr_test, vuong_from_pointwise, VuongCorrection};
use kinbm::numerics::{chi_square_sf, log_gamma, QuadratureConfig};
use kinbm::premium::{
    base_premium_reg, cumulated_scenarios, per_year_scenarios, premium_table, quote,
    rate_premium_closed_q1, rate_premium_reg, ClaimHistory, PremiumTable, TableKind,
};
use kinbm::regression::{
    em_fit_kinbm_dist, em_fit_kinbm_reg, CountData, FitConfig, FittedParams, KinbmRegParams,
    ParetoRegParams,
};
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Count model used to generate the portfolios of criteria 1 and 6.
fn generating_model() -> KinbmRegParams {
    KinbmRegParams::from_weights(
        Some(1),
        &[0.1, 0.9],
        vec![1.0],
        vec![vec![0.5, 0.1, -0.1, 0.1, -0.05]],
    )
    .expect("valid generating model")
}

fn portfolio(frequency: KinbmRegParams, seed: u64) -> Result<CountData, String> {
    let spec = PortfolioSpec {
        policies: 8874,
        years: 1,
        first_year: 2011,
        frequency,
        frequency_columns: None,
        severity: published_pareto_regression(1).map_err(err)?,
        severity_columns: None,
        covariates: CovariateLaw::default(),
    };
    let records = simulate_portfolio(&spec, seed).map_err(err)?;
    count_data(&records, None).map_err(err)
}

fn em_contract() -> Outcome {
    let start = Instant::now();
    let truth = generating_model();
    let mut failures = Vec::new();
    for seed in 1..=20u64 {
        let data = portfolio(truth.clone(), seed)?;
        let fit = em_fit_kinbm_reg(&data, 2, Some(1), &FitConfig::default()).map_err(err)?;
        let trace = &fit.loglik_trace;
        if trace.windows(2).any(|w| w[1] < w[0] - 1e-10) {
            failures.push(format!("seed {seed}: log-likelihood decreased"));
        }
        let FittedParams::KinbmReg(p) = &fit.params else {
            return Err("unexpected fitted family".into());
        };
        if (p.inflation() - truth.inflation()).abs() > 0.03 {
            failures.push(format!("seed {seed}: inflation {:.4}", p.inflation()));
        }
        let rel = (p.shapes()[0] / truth.shapes()[0] - 1.0).abs();
        if rel > 0.15 {
            failures.push(format!("seed {seed}: shape {:.4}", p.shapes()[0]));
        }
        let inf = fit.inference.as_ref().ok_or("no standard errors")?;
        for (j, b) in truth.coef()[0].iter().enumerate() {
            let (est, se) = inf.get(&format!("beta[0][{j}]")).ok_or("missing coefficient")?;
            if (est - b).abs() > 3.0 * se {
                failures.push(format!("seed {seed}: beta[{j}] {est:.4} (se {se:.4}, true {b})"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 300.0 {
        failures.push(format!("runtime {secs:.0}s"));
    }
    check(
        failures.is_empty(),
        format!("20 portfolios in {secs:.1}s{}", failure_list(&failures)),
    )
}

fn failure_list(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!("; {}", failures.join("; "))
    }
}

/// Probability of `y` under a Poisson whose mean is gamma distributed,
/// integrated in `s = ln λ` by composite Simpson.
fn mixed_poisson(y: u64, shape: f64, rate: f64) -> f64 {
    let ln_norm = shape * rate.ln() - log_gamma(shape).unwrap();
    let ln_fact = log_gamma(y as f64 + 1.0).unwrap();
    let f = |s: f64| {
        let lambda = s.exp();
        let ln = ln_norm + shape * s - rate * lambda + y as f64 * s - lambda - ln_fact;
        ln.exp()
    };
    let (lo, hi) = (-400.0 / shape.min(1.0), (60.0 / (rate + 1.0) + 50.0).ln() + 3.0);
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(lo + i as f64 * h);
    }
    sum * h / 3.0
}

fn corollary_oracle() -> Outcome {
    let mut rng = stream_rng(2, 0);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let c = rng.random_range(1..=3usize);
        let k = rng.random_range(0..=3u32);
        let mut weights = vec![rng.random_range(0.0..0.5)];
        weights.extend((0..c).map(|_| rng.random_range(0.1..1.0)));
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let shapes: Vec<f64> = (0..c).map(|_| rng.random_range(0.3..10.0)).collect();
        let means: Vec<f64> = (0..c).map(|_| rng.random_range(0.1..5.0)).collect();
        // NB component (α, τ) has mean α²/τ
        let taus: Vec<f64> = shapes.iter().zip(&means).map(|(a, m)| a * a / m).collect();
        let params = KinbmParams::new(k, weights, shapes, taus).map_err(err)?;
        for y in 0..=20u64 {
            let w = params.weights();
            let mut oracle = if y == u64::from(k) { w[0] } else { 0.0 };
            for j in 0..params.shapes().len() {
                let a = params.shapes()[j];
                oracle += w[j + 1] * mixed_poisson(y, a, params.rates()[j] / a);
            }
            worst = worst.max((oracle - params.log_pmf(y).exp()).abs());
        }
    }
    check(worst <= 1e-6, format!("max |integral - pmf| = {worst:.2e} over 10 sets, y = 0..20"))
}

fn closed_form_vs_quadrature() -> Outcome {
    let quad = QuadratureConfig::default();
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut models = Vec::new();
    for alpha in [0.5, 2.0, 5.717, 23.39] {
        models.push((
            KinbmRegParams::from_weights(None, &[0.0, 1.0], vec![alpha], vec![vec![-1.4]])
                .map_err(err)?,
            vec![1.0],
        ));
        models.push((
            KinbmRegParams::from_weights(
                None,
                &[0.0, 0.6, 0.4],
                vec![alpha, 1.3],
                vec![vec![-0.9, 0.2], vec![-2.0, 0.4]],
            )
            .map_err(err)?,
            vec![1.0, 2.0],
        ));
    }
    for (params, x) in &models {
        for t in 0..=3usize {
            for total in 0..=6u64 {
                if t == 0 && total > 0 {
                    continue;
                }
                // spread the claims as evenly as possible over the years
                let counts: Vec<u64> = (0..t as u64)
                    .map(|l| total / t as u64 + u64::from(l < total % t as u64))
                    .collect();
                let h = ClaimHistory::from_counts(counts);
                let closed = rate_premium_closed_q1(&h, x, params).map_err(err)?;
                let integral = rate_premium_reg(&h, x, params, &quad).map_err(err)?;
                worst = worst.max((closed - integral).abs() / closed);
                cases += 1;
            }
        }
    }
    check(worst <= 1e-6, format!("max relative gap {worst:.2e} over {cases} cases"))
}

fn base_algebra() -> Outcome {
    let mut rng = stream_rng(4, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ncol = rng.random_range(1..=5usize);
        let d: Vec<f64> = (0..ncol).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut w = vec![1.0];
        w.extend((1..ncol).map(|_| rng.random_range(0..=4) as f64));
        let eta = rng.random_range(1.2..10.0);
        let sev = ParetoRegParams::new(vec![1.0], vec![eta], vec![d.clone()]).map_err(err)?;
        let years = rng.random_range(1..=4usize);
        let counts: Vec<u64> = (0..years).map(|_| rng.random_range(0..=3)).collect();
        let sizes: Vec<Vec<f64>> = counts
            .iter()
            .map(|&c| (0..c).map(|_| rng.random_range(1.0..5000.0)).collect())
            .collect();
        let h = ClaimHistory::new(counts, sizes).map_err(err)?;
        let wd: f64 = w.iter().zip(&d).map(|(a, b)| a * b).sum();
        let k = h.total_claims() as f64;
        let s = h.total_severity();
        let expected = wd.exp() * (eta + (-wd).exp() * s - 1.0) / (eta + k - 1.0);
        let got = base_premium_reg(&h, &w, &sev).map_err(err)?;
        worst = worst.max((got - expected).abs() / expected);
    }
    check(worst <= 1e-12, format!("max relative gap {worst:.2e} over 100 instances"))
}

const ALL_MODELS: [&str; 6] = ["NBM1", "NBM2", "NBM3", "1INBM1", "1INBM2", "1INBM3"];

fn normalization() -> Outcome {
    let quad = QuadratureConfig::default();
    let models = ALL_MODELS
        .iter()
        .map(|n| published_pricing_model(n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let categories = pricing_categories();
    let mut failures = Vec::new();
    let layouts = [
        cumulated_scenarios(2, 4, Some(1000.0)).map_err(err)?,
        per_year_scenarios(&[4, 2], Some(1000.0)).map_err(err)?,
    ];
    let mut compared = 0;
    for scenarios in &layouts {
        let rate = premium_table(scenarios, &categories, &models, TableKind::Rate, &quad)
            .map_err(err)?;
        if rate.rows[0].values.iter().any(|&v| v != 1.0) {
            failures.push("a t=0 rate differs from 1".to_string());
        }
        let pure = premium_table(scenarios, &categories, &models, TableKind::Pure, &quad)
            .map_err(err)?;
        for (s, row) in scenarios.iter().zip(&pure.rows) {
            for (model, chunk) in models.iter().zip(row.values.chunks(categories.len())) {
                for (cat, &v) in categories.iter().zip(chunk) {
                    let q = quote(&s.history, cat, model, &quad).map_err(err)?;
                    let rel = (v - q.rate * q.base).abs() / v;
                    if rel > 1e-12 {
                        failures.push(format!("{} {} {}: pure/rate*base gap {rel:.1e}", model.name, cat.label, s.pattern));
                    }
                    if s.years == 0 && v != q.base {
                        failures.push(format!("{} {}: t=0 pure differs from base", model.name, cat.label));
                    }
                    compared += 1;
                }
            }
        }
    }
    check(
        failures.is_empty(),
        format!("{compared} pure premiums checked, t=0 rates exactly 1{}", failure_list(&failures)),
    )
}

fn df_bookkeeping() -> Outcome {
    let data = portfolio(generating_model(), 606)?;
    let cfg = FitConfig { standard_errors: false, ..FitConfig::default() };
    let d1 = em_fit_kinbm_dist(data.y(), 2, Some(1), &cfg).map_err(err)?.df;
    let d2 = em_fit_kinbm_dist(data.y(), 3, Some(1), &cfg).map_err(err)?.df;
    let r1 = em_fit_kinbm_reg(&data, 2, Some(1), &cfg).map_err(err)?.df;
    check(
        (d1, d2, r1) == (3, 6, 7),
        format!("1INBM1 dist df={d1}, 1INBM2 dist df={d2}, 1INBM1 reg df={r1}"),
    )
}

fn sampler_gof() -> Outcome {
    let mut sets = vec![
        published_distribution("1INBM1").and_then(|p| p.to_kinbm()).map_err(err)?,
        published_distribution("1INBM2").and_then(|p| p.to_kinbm()).map_err(err)?,
        published_distribution("NBM3").and_then(|p| p.to_kinbm()).map_err(err)?,
    ];
    sets.push(KinbmParams::new(2, vec![0.3, 0.4, 0.3], vec![0.8, 3.0], vec![0.5, 4.0]).map_err(err)?);
    sets.push(KinbmParams::new(0, vec![0.5, 0.5], vec![2.5], vec![1.0]).map_err(err)?);
    let mut ps = Vec::new();
    let mut reproducible = true;
    for (i, params) in sets.iter().enumerate() {
        let n = 1_000_000usize;
        let seed = 7_000 + i as u64;
        let draws = params.sample(n, seed);
        reproducible &= draws == params.sample(n, seed);
        let max = *draws.iter().max().unwrap_or(&0) as usize;
        let mut observed = vec![0f64; max + 1];
        for &d in &draws {
            observed[d as usize] += 1.0;
        }
        // cells with expected count ≥ 5; the remainder pooled into one tail cell
        let mut cells: Vec<(f64, f64)> = Vec::new();
        let mut mass = 0.0;
        let mut y = 0usize;
        loop {
            let e = n as f64 * params.log_pmf(y as u64).exp();
            if e < 5.0 || 1.0 - mass - e / n as f64 <= 5.0 / n as f64 {
                break;
            }
            cells.push((observed.get(y).copied().unwrap_or(0.0), e));
            mass += e / n as f64;
            y += 1;
        }
        let tail_obs: f64 = observed.iter().skip(y).sum();
        cells.push((tail_obs, n as f64 * (1.0 - mass)));
        let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let p = chi_square_sf(stat, (cells.len() - 1) as f64).map_err(err)?;
        ps.push(p);
    }
    let shown = ps.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(", ");
    check(
        ps.iter().all(|&p| p > 0.01) && reproducible,
        format!("p-values [{shown}], identical seeds reproduce draws: {reproducible}"),
    )
}

fn test_statistics() -> Outcome {
    let data = portfolio(generating_model(), 808)?;
    let cfg = FitConfig { standard_errors: false, ..FitConfig::default() };
    let nbm = em_fit_kinbm_reg(&data, 2, None, &cfg).map_err(err)?;
    let inb = em_fit_kinbm_reg(&data, 2, Some(1), &cfg).map_err(err)?;
    let l1 = nbm.pointwise_counts(&data).map_err(err)?;
    let l2 = inb.pointwise_counts(&data).map_err(err)?;
    let ids = ("NBM1".to_string(), "1INBM1".to_string());
    let back = (ids.1.clone(), ids.0.clone());
    let ab = vuong_from_pointwise(ids, &l1, &l2, (nbm.df, inb.df), VuongCorrection::None)
        .map_err(err)?;
    let ba = vuong_from_pointwise(back, &l2, &l1, (inb.df, nbm.df), VuongCorrection::None)
        .map_err(err)?;
    let antisymmetric = ab.statistic == -ba.statistic && ab.p_value == ba.p_value;
    let same = lr_test(&inb, &inb).map_err(err)?;
    let identical = same.statistic == 0.0 && same.p_value == 1.0;

    // nested-true LR replicates: gender has no effect on the generating model
    let truth = KinbmRegParams::from_weights(None, &[0.0, 1.0], vec![1.5], vec![vec![-0.5, 0.0]])
        .map_err(err)?;
    let fast = FitConfig { standard_errors: false, n_restarts: 0, ..FitConfig::default() };
    let reps = 200u64;
    let rejections: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(88, r);
            let rows: Vec<Vec<f64>> =
                (0..2000).map(|_| vec![1.0, f64::from(rng.random_range(0..=1u8))]).collect();
            let y = truth.sample(&rows, 1_000 + r).map_err(err)?;
            let full_data = CountData::new(y, rows).map_err(err)?;
            let null_data = full_data.select_columns(&[]).map_err(err)?;
            let full = em_fit_kinbm_reg(&full_data, 2, None, &fast).map_err(err)?;
            let null = em_fit_kinbm_reg(&null_data, 2, None, &fast).map_err(err)?;
            Ok(lr_test(&null, &full).map_err(err)?.p_value < 0.05)
        })
        .collect::<Result<_, String>>()?;
    let size = rejections.iter().filter(|&&r| r).count() as f64 / reps as f64;
    check(
        antisymmetric && identical && (size - 0.05).abs() <= 0.03,
        format!(
            "Vuong antisymmetric: {antisymmetric}; LR on identical fits 0/p=1: {identical}; \
             LR size {:.1}% over {reps} replicates",
            100.0 * size
        ),
    )
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_kinbm")).args(args).output().map_err(err)?;
    if !out.status.success() {
        return Err(format!("kinbm {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn pipeline_run(dir: &Path, seed: u64) -> Result<String, String> {
    let out = dir.to_str().ok_or("non-UTF-8 temp path")?;
    let seed = seed.to_string();
    let portfolio = format!("{out}/portfolio.csv");
    run_cli(&["simulate", "--out", out, "--seed", &seed])?;
    for (name, extra) in [
        ("nbm", vec!["--family", "nbm"]),
        ("zero", vec!["--family", "kinbm_reg", "--k", "0"]),
        ("one", vec!["--family", "kinbm_reg", "--k", "1"]),
    ] {
        let mut args = vec!["fit", "--out", out, "--seed", &seed, "--portfolio", &portfolio];
        args.extend(["--m", "2", "--name", name]);
        args.extend(extra);
        run_cli(&args)?;
    }
    let fits: Vec<String> = ["nbm", "zero", "one"].iter().map(|n| format!("{out}/{n}.fit.json")).collect();
    let mut args = vec!["compare", "--out", out, "--portfolio", &portfolio, "--no-simulation", "--format", "json"];
    for f in &fits {
        args.extend(["--fit", f.as_str()]);
    }
    let report: serde_json::Value = serde_json::from_str(&run_cli(&args)?).map_err(err)?;
    let rows = report["criteria"].as_array().ok_or("no criteria in compare output")?;
    let best = rows
        .iter()
        .min_by(|a, b| a["aic"].as_f64().partial_cmp(&b["aic"].as_f64()).unwrap())
        .ok_or("empty criteria")?;
    Ok(best["model"].as_str().unwrap_or("").to_string())
}

fn pipeline_recovery() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut losers = Vec::new();
    for seed in 1..=20u64 {
        let dir = tempfile::tempdir().map_err(err)?;
        let best = pipeline_run(dir.path(), seed)?;
        if best == "one" {
            wins += 1;
        } else {
            losers.push(format!("seed {seed}: {best}"));
        }
    }
    check(
        wins >= 18,
        format!(
            "1INBM1 wins AIC in {wins}/20 runs ({:.0}s){}",
            start.elapsed().as_secs_f64(),
            failure_list(&losers)
        ),
    )
}

const TABLE8: [[f64; 9]; 10] = [
    [0.96, 0.96, 0.98, 0.95, 0.91, 0.98, 0.95, 0.87, 0.90],
    [1.13, 1.08, 1.11, 1.02, 1.03, 1.10, 1.02, 1.00, 1.09],
    [1.29, 1.21, 1.24, 1.54, 1.18, 1.35, 1.42, 1.13, 1.96],
    [1.46, 1.33, 1.37, 5.05, 1.99, 2.91, 4.30, 1.67, 10.05],
    [1.63, 1.46, 1.50, 10.40, 5.78, 9.12, 9.76, 4.88, 24.99],
    [0.92, 0.92, 0.96, 0.93, 0.88, 0.96, 0.94, 0.83, 0.88],
    [1.08, 1.04, 1.09, 0.97, 1.00, 1.08, 0.98, 0.97, 1.04],
    [1.24, 1.16, 1.22, 1.04, 1.06, 1.19, 1.04, 1.05, 1.24],
    [1.40, 1.28, 1.35, 1.53, 1.18, 1.66, 1.40, 1.15, 2.39],
    [1.57, 1.40, 1.47, 4.69, 1.60, 4.00, 3.92, 1.41, 8.56],
];

const TABLE9: [[f64; 9]; 14] = [
    [0.64, 0.63, 0.88, 0.83, 0.81, 0.96, 0.79, 0.63, 0.96],
    [1.81, 1.55, 1.54, 1.26, 1.30, 1.13, 1.39, 1.29, 1.17],
    [6.52, 3.91, 4.86, 2.50, 2.43, 2.55, 3.55, 2.54, 2.21],
    [9.44, 4.94, 6.86, 3.30, 3.29, 3.64, 4.93, 3.50, 2.85],
    [12.37, 6.38, 8.85, 4.13, 4.12, 4.54, 6.31, 4.46, 3.49],
    [0.48, 0.46, 0.78, 0.72, 0.68, 0.93, 0.65, 0.48, 0.93],
    [1.15, 1.03, 1.33, 1.06, 1.05, 1.09, 1.10, 0.84, 1.03],
    [4.78, 2.56, 4.33, 2.19, 2.01, 2.46, 2.98, 1.79, 2.16],
    [1.15, 1.03, 1.33, 1.06, 1.05, 1.09, 1.10, 0.84, 1.13],
    [2.87, 2.06, 2.31, 1.57, 1.61, 1.30, 1.90, 1.53, 1.16],
    [6.79, 3.58, 5.63, 2.76, 2.60, 2.82, 3.93, 2.47, 2.38],
    [4.78, 2.56, 4.33, 2.19, 2.01, 2.46, 2.98, 1.79, 2.15],
    [6.79, 3.58, 5.63, 2.76, 2.60, 2.82, 3.93, 2.47, 2.38],
    [9.10, 4.67, 7.88, 3.67, 3.34, 3.99, 5.31, 3.09, 3.37],
];

fn side_by_side(title: &str, table: &PremiumTable, printed: &[[f64; 9]]) -> (String, f64) {
    let mut out = format!("{title}\n{:<4} {:<14}", "t", "history");
    for c in &table.columns {
        out.push_str(&format!(" {:>22}", format!("{} {}", c.model, c.category)));
    }
    out.push('\n');
    let mut worst = 0.0f64;
    for (row, paper) in table.rows.iter().skip(1).zip(printed) {
        out.push_str(&format!("{:<4} {:<14}", row.years, row.pattern));
        for (v, p) in row.values.iter().zip(paper) {
            let dev = v - p;
            worst = worst.max(dev.abs());
            out.push_str(&format!(" {v:>7.2} {p:>6.2} {dev:>+7.2}"));
        }
        out.push('\n');
    }
    (out, worst)
}

fn diagnostic() -> Outcome {
    let quad = QuadratureConfig::default();
    let categories = pricing_categories();
    let mut report = String::from("computed, printed and deviation for each model and category\n");
    let mut worst = Vec::new();
    for (title, names, scenarios, printed) in [
        (
            "cumulated claims",
            ["NBM1", "NBM2", "NBM3"],
            cumulated_scenarios(2, 4, None).map_err(err)?,
            &TABLE8[..],
        ),
        (
            "claims per year",
            ["1INBM1", "1INBM2", "1INBM3"],
            per_year_scenarios(&[4, 2], None).map_err(err)?,
            &TABLE9[..],
        ),
    ] {
        let models = names
            .iter()
            .map(|n| published_pricing_model(n))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let table = premium_table(&scenarios, &categories, &models, TableKind::Rate, &quad)
            .map_err(err)?;
        let (text, w) = side_by_side(title, &table, printed);
        report.push_str(&text);
        worst.push(format!("{title} max |deviation| {w:.2}"));
    }
    println!("{report}");
    Ok(format!("non-gating; {}", worst.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, bool); 10] = [
        ("EM contract on 20 simulated portfolios", em_contract, true),
        ("gamma-mixed inflated Poisson integral equals kINBM pmf", corollary_oracle, true),
        ("closed-form rate premium equals quadrature", closed_form_vs_quadrature, true),
        ("base premium algebra, one component", base_algebra, true),
        ("t=0 rate is 1, pure = rate x base", normalization, true),
        ("degrees of freedom", df_bookkeeping, true),
        ("sampler goodness of fit", sampler_gof, true),
        ("Vuong and LR test properties", test_statistics, true),
        ("CLI pipeline AIC recovery", pipeline_recovery, true),
        ("published parameters against printed rate tables", diagnostic, false),
    ];
    let mut failed = 0;
    let mut lines = Vec::new();
    for (i, (name, run, gating)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let line = match &outcome {
            Ok(detail) => format!("PASS criterion {}: {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                if *gating {
                    failed += 1;
                }
                format!("FAIL criterion {}: {name} ({secs:.1}s): {detail}", i + 1)
            }
        };
        println!("{line}");
        lines.push(line);
    }
    println!("\nsummary");
    for line in &lines {
        println!("{line}");
    }
    if failed > 0 {
        println!("{failed} gating criteria failed");
        if std::env::var_os("KINBM_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
