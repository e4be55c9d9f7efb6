//! Information criteria, likelihood-ratio and Vuong tests, and the
//! simulation harness that compares fitted count models with an observed
//! frequency table.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{derive_seed, KinbmParams};
use crate::error::{Error, Result};
use crate::numerics::{chi_square_sf, normal_sf};
use crate::regression::{CountData, FitResult, KinbmRegParams, SeverityData};

/// Significance level used to pick a winner.
pub const LEVEL: f64 = 0.05;

/// Akaike information criterion `−2ℓ + 2·df`.
pub fn aic(fit: &FitResult) -> f64 {
    aic_value(fit.loglik, fit.df)
}

/// Schwarz criterion `−2ℓ + df·ln n`.
pub fn sbic(fit: &FitResult) -> f64 {
    sbic_value(fit.loglik, fit.df, fit.n_obs as f64)
}

pub fn aic_value(loglik: f64, df: usize) -> f64 {
    -2.0 * loglik + 2.0 * df as f64
}

pub fn sbic_value(loglik: f64, df: usize, n: f64) -> f64 {
    -2.0 * loglik + df as f64 * n.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Vuong,
    Lr,
}

/// Outcome of a pairwise model comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model_ids: (String, String),
    pub statistic: f64,
    pub p_value: f64,
    /// One of the two model ids, or `"inconclusive"`.
    pub winner: String,
    pub test_kind: TestKind,
    /// Set when the chi-square reference is doubtful because the models
    /// differ in their number of mixture components.
    pub boundary_caveat: bool,
}

impl ComparisonReport {
    /// Replaces the default model ids, keeping the winner consistent.
    pub fn with_ids(mut self, first: &str, second: &str) -> Self {
        if self.winner == self.model_ids.0 {
            self.winner = first.to_string();
        } else if self.winner == self.model_ids.1 {
            self.winner = second.to_string();
        }
        self.model_ids = (first.to_string(), second.to_string());
        self
    }

    /// `winner (Statistic=s & P-value=p)`.
    pub fn summary(&self) -> String {
        format!(
            "{} (Statistic={:.2} & P-value={:.2})",
            self.winner, self.statistic, self.p_value
        )
    }
}

/// Renders reports as CSV with one row per comparison.
pub fn comparisons_to_csv(reports: &[ComparisonReport]) -> String {
    let mut out = String::from("test,model_1,model_2,statistic,p_value,winner,boundary_caveat\n");
    for r in reports {
        let kind = match r.test_kind {
            TestKind::Vuong => "vuong",
            TestKind::Lr => "lr",
        };
        let _ = writeln!(
            out,
            "{kind},{},{},{},{},{},{}",
            r.model_ids.0, r.model_ids.1, r.statistic, r.p_value, r.winner, r.boundary_caveat
        );
    }
    out
}

/// Aligned text with one line per comparison.
pub fn comparisons_to_text(reports: &[ComparisonReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.model_ids.0.len() + r.model_ids.1.len() + 5)
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for r in reports {
        let pair = format!("{} vs {}", r.model_ids.0, r.model_ids.1);
        let mark = if r.boundary_caveat { " *" } else { "" };
        let _ = writeln!(out, "{pair:<width$}  {}{mark}", r.summary());
    }
    if reports.iter().any(|r| r.boundary_caveat) {
        out.push_str("* models differ in component count; chi-square reference is approximate\n");
    }
    out
}

fn check_same_data(a: &FitResult, b: &FitResult) -> Result<()> {
    if a.family().is_frequency() != b.family().is_frequency() {
        return Err(Error::Contract(
            "cannot compare a frequency model with a severity model".into(),
        ));
    }
    if a.n_obs != b.n_obs {
        return Err(Error::Contract(format!(
            "fits use different data sizes ({} and {})",
            a.n_obs, b.n_obs
        )));
    }
    Ok(())
}

/// Likelihood-ratio test of a nested model against a larger one. A fit
/// tested against itself gives statistic 0 and p-value 1.
pub fn lr_test(nested: &FitResult, full: &FitResult) -> Result<ComparisonReport> {
    check_same_data(nested, full)?;
    if nested.params == full.params && nested.loglik == full.loglik {
        let id = nested.params.label();
        return Ok(ComparisonReport {
            model_ids: (id.clone(), id.clone()),
            statistic: 0.0,
            p_value: 1.0,
            winner: id,
            test_kind: TestKind::Lr,
            boundary_caveat: false,
        });
    }
    if nested.df >= full.df {
        return Err(Error::Contract(format!(
            "nested model has {} parameters, full model {}; the nested one must be smaller",
            nested.df, full.df
        )));
    }
    let statistic = 2.0 * (full.loglik - nested.loglik);
    let p_value = chi_square_sf(statistic.max(0.0), (full.df - nested.df) as f64)?;
    let ids = (nested.params.label(), full.params.label());
    let winner = if p_value < LEVEL { ids.1.clone() } else { ids.0.clone() };
    Ok(ComparisonReport {
        model_ids: ids,
        statistic,
        p_value,
        winner,
        test_kind: TestKind::Lr,
        boundary_caveat: nested.params.components() != full.params.components(),
    })
}

/// Penalty applied to the summed log-likelihood ratio.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VuongCorrection {
    #[default]
    None,
    /// Subtracts `df₁ − df₂`.
    Aic,
    /// Subtracts `(df₁ − df₂)·ln n / 2`.
    Schwarz,
}

/// Observations both fits are evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Observations<'a> {
    Counts(&'a CountData),
    Severities(&'a SeverityData),
}

impl Observations<'_> {
    fn pointwise(&self, fit: &FitResult) -> Result<Vec<f64>> {
        match self {
            Observations::Counts(d) => fit.pointwise_counts(d),
            Observations::Severities(d) => fit.pointwise_severities(d),
        }
    }
}

/// Vuong test of two non-nested models. A positive statistic favours the
/// first model, a negative one the second.
pub fn vuong_test(
    fit1: &FitResult,
    fit2: &FitResult,
    data: Observations<'_>,
    correction: VuongCorrection,
) -> Result<ComparisonReport> {
    check_same_data(fit1, fit2)?;
    let l1 = data.pointwise(fit1)?;
    let l2 = data.pointwise(fit2)?;
    let ids = (fit1.params.label(), fit2.params.label());
    vuong_from_pointwise(ids, &l1, &l2, (fit1.df, fit2.df), correction)
}

/// Vuong test from per-observation log-likelihoods.
pub fn vuong_from_pointwise(
    model_ids: (String, String),
    l1: &[f64],
    l2: &[f64],
    df: (usize, usize),
    correction: VuongCorrection,
) -> Result<ComparisonReport> {
    if l1.len() != l2.len() {
        return Err(Error::DimensionMismatch { expected: l1.len(), got: l2.len() });
    }
    if l1.is_empty() {
        return Err(Error::EmptyInput("Vuong test needs observations".into()));
    }
    let n = l1.len() as f64;
    let d: Vec<f64> = l1.iter().zip(l2).map(|(a, b)| a - b).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite log-likelihood ratio".into()));
    }
    let report = |statistic: f64, p_value: f64, winner: String| ComparisonReport {
        model_ids: model_ids.clone(),
        statistic,
        p_value,
        winner,
        test_kind: TestKind::Vuong,
        boundary_caveat: false,
    };
    if d.iter().all(|&v| v == 0.0) {
        return Ok(report(0.0, 1.0, "inconclusive".into()));
    }
    let sum: f64 = d.iter().sum();
    let mean = sum / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(var.sqrt() > 1e-12 * scale) {
        return Err(Error::Domain(
            "log-likelihood ratios have zero variance; the Vuong statistic is undefined".into(),
        ));
    }
    let diff = df.0 as f64 - df.1 as f64;
    let penalty = match correction {
        VuongCorrection::None => 0.0,
        VuongCorrection::Aic => diff,
        VuongCorrection::Schwarz => 0.5 * diff * n.ln(),
    };
    let statistic = (sum - penalty) / (n * var).sqrt();
    let p_value = (2.0 * normal_sf(statistic.abs())).min(1.0);
    let winner = if p_value >= LEVEL {
        "inconclusive".to_string()
    } else if statistic > 0.0 {
        model_ids.0.clone()
    } else {
        model_ids.1.clone()
    };
    Ok(report(statistic, p_value, winner))
}

/// Model, parameter count and information criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaRow {
    pub model: String,
    pub df: usize,
    pub loglik: f64,
    pub aic: f64,
    pub sbic: f64,
}

impl CriteriaRow {
    pub fn from_fit(model: &str, fit: &FitResult) -> Self {
        CriteriaRow {
            model: model.to_string(),
            df: fit.df,
            loglik: fit.loglik,
            aic: aic(fit),
            sbic: sbic(fit),
        }
    }
}

pub fn criteria_to_csv(rows: &[CriteriaRow]) -> String {
    let mut out = String::from("model,df,loglik,aic,sbic\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.model, r.df, r.loglik, r.aic, r.sbic);
    }
    out
}

pub fn criteria_to_text(rows: &[CriteriaRow]) -> String {
    let width = rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>4}  {:>12}  {:>12}\n", "Model", "df", "AIC", "SBIC");
    for r in rows {
        let _ = writeln!(out, "{:<width$}  {:>4}  {:>12.2}  {:>12.2}", r.model, r.df, r.aic, r.sbic);
    }
    out
}

/// Number of count classes: `0, 1, …, 6` and `>6`.
pub const CLASSES: usize = 8;

/// Frequencies of claim counts binned as `0, 1, …, 6, >6`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub cells: [u64; CLASSES],
}

impl FrequencyTable {
    pub fn new(cells: [u64; CLASSES]) -> Self {
        FrequencyTable { cells }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        let mut cells = [0u64; CLASSES];
        for &y in counts {
            cells[Self::class_of(y)] += 1;
        }
        FrequencyTable { cells }
    }

    pub fn class_of(y: u64) -> usize {
        (y as usize).min(CLASSES - 1)
    }

    pub fn labels() -> [&'static str; CLASSES] {
        ["0", "1", "2", "3", "4", "5", "6", ">6"]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }
}

/// A count model that can draw a sample of `n` policyholders.
pub trait CountSimulator: Sync {
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<u64>>;
}

impl CountSimulator for KinbmParams {
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<u64>> {
        Ok(self.sample(n, seed))
    }
}

/// A count regression applied to a fixed list of covariate rows. Draw `i`
/// uses row `i mod rows.len()`.
#[derive(Debug, Clone, Copy)]
pub struct RegressionSimulator<'a> {
    pub params: &'a KinbmRegParams,
    pub rows: &'a [Vec<f64>],
}

impl CountSimulator for RegressionSimulator<'_> {
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<u64>> {
        if self.rows.is_empty() {
            return Err(Error::EmptyInput("regression simulator needs covariate rows".into()));
        }
        let rows: Vec<Vec<f64>> =
            (0..n).map(|i| self.rows[i % self.rows.len()].clone()).collect();
        self.params.sample(&rows, seed)
    }
}

/// Wraps a closure `(n, seed) -> counts` as a simulator.
pub struct FnSimulator<F>(pub F);

impl<F> CountSimulator for FnSimulator<F>
where
    F: Fn(usize, u64) -> Vec<u64> + Sync,
{
    fn simulate(&self, n: usize, seed: u64) -> Result<Vec<u64>> {
        Ok((self.0)(n, seed))
    }
}

/// Per-class summary of simulated frequencies against the observed table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub class: String,
    pub observed: u64,
    pub mean: f64,
    /// `(1/reps) Σ (simulated − observed)²`.
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub reps: usize,
    pub n: usize,
    pub seed: u64,
    pub cells: Vec<SimulationCell>,
}

impl SimulationSummary {
    /// `mean(MSE)` for every class, as printed in a frequency-fit table.
    pub fn formatted_cells(&self) -> Vec<String> {
        self.cells.iter().map(|c| format!("{:.2}({:.2})", c.mean, c.mse)).collect()
    }
}

/// Draws `reps` samples of size `n` and summarises them per count class.
/// Replicate `r` uses seed `derive_seed(seed, r)`.
pub fn simulation_mse<S: CountSimulator + ?Sized>(
    model: &S,
    observed: &FrequencyTable,
    reps: usize,
    n: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    if reps == 0 {
        return Err(Error::InvalidParams("simulation needs at least one replicate".into()));
    }
    let tables: Vec<FrequencyTable> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let y = model.simulate(n, derive_seed(seed, r as u64))?;
            if y.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: y.len() });
            }
            Ok(FrequencyTable::from_counts(&y))
        })
        .collect::<Result<_>>()?;
    let labels = FrequencyTable::labels();
    let cells = (0..CLASSES)
        .map(|c| {
            let obs = observed.cells[c] as f64;
            let (mut sum, mut sq) = (0.0, 0.0);
            for t in &tables {
                let v = t.cells[c] as f64;
                sum += v;
                sq += (v - obs) * (v - obs);
            }
            SimulationCell {
                class: labels[c].to_string(),
                observed: observed.cells[c],
                mean: sum / reps as f64,
                mse: sq / reps as f64,
            }
        })
        .collect();
    Ok(SimulationSummary { reps, n, seed, cells })
}

/// CSV with one row per model and `mean`/`mse` column pairs per class.
pub fn simulation_to_csv(observed: &FrequencyTable, rows: &[(String, SimulationSummary)]) -> String {
    let labels = FrequencyTable::labels();
    let mut out = String::from("model");
    for l in labels {
        let _ = write!(out, ",mean_{l},mse_{l}");
    }
    out.push('\n');
    out.push_str("observed");
    for v in observed.cells {
        let _ = write!(out, ",{v},");
    }
    out.push('\n');
    for (name, s) in rows {
        out.push_str(name);
        for c in &s.cells {
            let _ = write!(out, ",{},{}", c.mean, c.mse);
        }
        out.push('\n');
    }
    out
}

/// Aligned text with `mean(MSE)` cells.
pub fn simulation_to_text(observed: &FrequencyTable, rows: &[(String, SimulationSummary)]) -> String {
    let labels = FrequencyTable::labels();
    let mut grid: Vec<Vec<String>> = Vec::new();
    grid.push(std::iter::once("Model".to_string()).chain(labels.iter().map(|l| l.to_string())).collect());
    grid.push(
        std::iter::once("Observed".to_string())
            .chain(observed.cells.iter().map(|v| v.to_string()))
            .collect(),
    );
    for (name, s) in rows {
        grid.push(std::iter::once(name.clone()).chain(s.formatted_cells()).collect());
    }
    let widths: Vec<usize> =
        (0..=CLASSES).map(|j| grid.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in grid {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(j, cell)| if j == 0 { format!("{cell:<w$}", w = widths[0]) } else { format!("{cell:>w$}", w = widths[j]) })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}
