//! The four subcommands. Each returns the report printed on stdout and
//! writes its artefacts into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use kinbm::data_io::fixtures::{
    pricing_categories, published_pareto_regression, published_pricing_model, published_regression,
};
use kinbm::data_io::{
    count_data, encode_design_row, observed_frequencies, parse_portfolio, severity_data,
    simulate_portfolio, write_portfolio, PolicyRecord, PortfolioSpec, Profile, DESIGN_COLUMNS,
};
use kinbm::model_selection::{
    aic, comparisons_to_csv, comparisons_to_text, criteria_to_csv, criteria_to_text, lr_test,
    sbic, simulation_mse, simulation_to_csv, simulation_to_text, vuong_from_pointwise,
    ComparisonReport, CountSimulator, CriteriaRow, RegressionSimulator, SimulationSummary,
};
use kinbm::premium::{
    cumulated_scenarios, per_year_scenarios, premium_table, Category, FrequencyModel, ModelSet,
    PremiumTable, PricingModel, Scenario, SeverityModel,
};
use kinbm::regression::{
    em_fit_kinbm_dist, em_fit_kinbm_reg, em_fit_pareto_dist, em_fit_pareto_reg, FitResult,
    FittedParams,
};
use serde::Serialize;

use crate::config::{CategoryConfig, FamilyChoice, Form, Format, Layout, PriceKind, RunConfig};
use crate::error::{CliError, Result};

/// Resolved settings shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Context> {
        config.validate()?;
        let out = config.out_dir();
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Context { format: config.format(), seed: config.seed(), out, config })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Writes the effective configuration next to the command's output.
    pub fn echo_config(&self, command: &str) -> Result<()> {
        let mut effective = self.config.clone();
        effective.seed = Some(self.seed);
        effective.format = Some(self.format);
        effective.out = Some(self.out.clone());
        let text = toml::to_string(&effective)?;
        log::info!("effective configuration:\n{text}");
        self.write(&format!("{command}.config.toml"), &text)?;
        Ok(())
    }
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("missing required setting {key}")))
}

fn load_fit(path: &Path) -> Result<FitResult> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(FitResult::from_json(&text)?)
}

fn fit_name(path: &Path) -> String {
    let stem = path.file_name().and_then(|s| s.to_str()).unwrap_or("fit");
    stem.strip_suffix(".fit.json")
        .or_else(|| stem.strip_suffix(".json"))
        .unwrap_or(stem)
        .to_string()
}

/// Design columns of a fitted model, recovered from its covariate names.
pub fn fit_columns(fit: &FitResult) -> Result<Vec<usize>> {
    let mut cols = vec![0];
    for name in &fit.covariates {
        let idx = DESIGN_COLUMNS.iter().position(|c| c == name).ok_or_else(|| {
            CliError::Config(format!("fit refers to unknown covariate {name:?}"))
        })?;
        cols.push(idx);
    }
    Ok(cols)
}

fn column_names(cols: &[usize]) -> Vec<String> {
    cols[1..].iter().map(|&c| DESIGN_COLUMNS[c].to_string()).collect()
}

pub fn simulate(ctx: &Context) -> Result<String> {
    let s = &ctx.config.simulate;
    let frequency = match &s.frequency {
        Some(p) => p.clone(),
        None => published_regression(&s.preset)?,
    };
    let severity = match &s.severity {
        Some(p) => p.clone(),
        None => published_pareto_regression(1)?,
    };
    let spec = PortfolioSpec {
        policies: s.policies,
        years: s.years,
        first_year: s.first_year,
        frequency,
        frequency_columns: s.frequency_columns.clone(),
        severity,
        severity_columns: s.severity_columns.clone(),
        covariates: s.covariates.clone(),
    };
    let records = simulate_portfolio(&spec, ctx.seed)?;
    let csv_path = ctx.path("portfolio.csv");
    write_portfolio(&csv_path, &records)?;
    #[derive(Serialize)]
    struct Generating<'a> {
        seed: u64,
        spec: &'a PortfolioSpec,
    }
    let json = serde_json::to_string_pretty(&Generating { seed: ctx.seed, spec: &spec })?;
    ctx.write("generating_params.json", &json)?;
    Ok(portfolio_summary(&records, &csv_path, ctx.format))
}

fn portfolio_summary(records: &[PolicyRecord], path: &Path, format: Format) -> String {
    let table = observed_frequencies(records);
    let years: usize = records.iter().map(|r| r.years.len()).sum();
    let claims: u64 = records.iter().map(PolicyRecord::total_claims).sum();
    match format {
        Format::Json => serde_json::json!({
            "portfolio": path,
            "policies": records.len(),
            "policy_years": years,
            "claims": claims,
            "frequencies": table.cells,
        })
        .to_string(),
        Format::Csv => {
            let mut out = String::from("class,frequency\n");
            for (l, v) in kinbm::model_selection::FrequencyTable::labels().iter().zip(table.cells) {
                let _ = writeln!(out, "{l},{v}");
            }
            out
        }
        Format::Text => {
            let mut out = format!(
                "portfolio {}\npolicies {}  policy-years {years}  claims {claims}\n",
                path.display(),
                records.len()
            );
            let labels = kinbm::model_selection::FrequencyTable::labels();
            let _ = writeln!(out, "{}", labels.map(|l| format!("{l:>7}")).join(""));
            let _ = writeln!(out, "{}", table.cells.map(|v| format!("{v:>7}")).join(""));
            out
        }
    }
}

pub fn fit(ctx: &Context) -> Result<String> {
    let f = &ctx.config.fit;
    let path = required(&f.portfolio, "fit.portfolio")?;
    let records = parse_portfolio(path)?;
    let mut em = f.em.clone();
    if ctx.config.seed.is_some() {
        em.seed = ctx.seed;
    }
    let regression = match f.family {
        FamilyChoice::KinbmReg | FamilyChoice::ParetoReg => true,
        FamilyChoice::KinbmDist | FamilyChoice::ParetoDist => false,
        FamilyChoice::Nbm => f.form == Form::Regression,
    };
    let cols: Vec<usize> = if regression {
        f.columns.clone().unwrap_or_else(|| (0..DESIGN_COLUMNS.len()).collect())
    } else {
        vec![0]
    };
    let k = match f.family {
        FamilyChoice::Nbm => None,
        _ => Some(f.k),
    };
    let mut result = match f.family {
        FamilyChoice::KinbmReg | FamilyChoice::KinbmDist | FamilyChoice::Nbm => {
            let data = count_data(&records, Some(&cols))?;
            if regression {
                em_fit_kinbm_reg(&data, f.m, k, &em)?
            } else {
                em_fit_kinbm_dist(data.y(), f.m, k, &em)?
            }
        }
        FamilyChoice::ParetoReg => em_fit_pareto_reg(&severity_data(&records, Some(&cols))?, f.m, &em)?,
        FamilyChoice::ParetoDist => {
            em_fit_pareto_dist(severity_data(&records, Some(&[0]))?.z(), f.m, &em)?
        }
    };
    result.covariates = column_names(&cols);
    let suffix = if regression { "reg" } else { "dist" };
    let name = f.name.clone().unwrap_or_else(|| format!("{}_{suffix}", result.params.label()));
    let json = result.to_json()?;
    let path = ctx.write(&format!("{name}.fit.json"), &json)?;
    log::info!("wrote {}", path.display());
    Ok(match ctx.format {
        Format::Json => json,
        Format::Csv => fit_csv(&result),
        Format::Text => fit_text(&name, &result),
    })
}

fn fit_csv(fit: &FitResult) -> String {
    let mut out = String::from("parameter,estimate,std_error\n");
    match &fit.inference {
        Some(inf) => {
            for ((n, e), s) in inf.names.iter().zip(&inf.estimates).zip(&inf.std_errors) {
                let _ = writeln!(out, "{n},{e},{s}");
            }
        }
        None => {
            let _ = writeln!(out, "loglik,{},", fit.loglik);
        }
    }
    out
}

fn fit_text(name: &str, fit: &FitResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model       {name} ({})", fit.params.label());
    let _ = writeln!(out, "n           {}", fit.n_obs);
    let _ = writeln!(out, "loglik      {:.4}", fit.loglik);
    let _ = writeln!(out, "df          {}", fit.df);
    let _ = writeln!(out, "AIC         {:.4}", aic(fit));
    let _ = writeln!(out, "SBIC        {:.4}", sbic(fit));
    let _ = writeln!(
        out,
        "converged   {} after {} iterations, best of {} runs (seed {})",
        fit.converged, fit.iterations, fit.runs, fit.seed
    );
    if !fit.degenerate.is_empty() {
        let _ = writeln!(out, "degenerate  components {:?}", fit.degenerate);
    }
    match &fit.inference {
        Some(inf) => {
            let width = inf.names.iter().map(String::len).max().unwrap_or(9).max(9);
            let _ = writeln!(out, "{:<width$}  {:>12}  {:>12}", "parameter", "estimate", "std_error");
            for ((n, e), s) in inf.names.iter().zip(&inf.estimates).zip(&inf.std_errors) {
                let _ = writeln!(out, "{n:<width$}  {e:>12.5}  {s:>12.5}");
            }
        }
        None => {
            let params = serde_json::to_string(&fit.params).unwrap_or_default();
            let _ = writeln!(out, "parameters  {params}");
        }
    }
    out
}

/// Whether `a` is a restriction of `b`: same kind of model, no more
/// components, a subset of the design columns and fewer parameters.
fn nested(a: &FitResult, acols: &[usize], b: &FitResult, bcols: &[usize]) -> bool {
    if a.df >= b.df || !acols.iter().all(|c| bcols.contains(c)) {
        return false;
    }
    match (&a.params, &b.params) {
        (
            FittedParams::KinbmReg(p) | FittedParams::KinbmDist(p),
            FittedParams::KinbmReg(q) | FittedParams::KinbmDist(q),
        ) => (p.k().is_none() || p.k() == q.k()) && p.n_nb() <= q.n_nb(),
        (
            FittedParams::ParetoReg(_) | FittedParams::ParetoDist(_),
            FittedParams::ParetoReg(_) | FittedParams::ParetoDist(_),
        ) => a.params.components() <= b.params.components(),
        _ => false,
    }
}

struct LoadedFit {
    name: String,
    fit: FitResult,
    cols: Vec<usize>,
}

impl LoadedFit {
    fn pointwise(&self, records: &[PolicyRecord]) -> Result<Vec<f64>> {
        if self.fit.family().is_frequency() {
            Ok(self.fit.pointwise_counts(&count_data(records, Some(&self.cols))?)?)
        } else {
            Ok(self.fit.pointwise_severities(&severity_data(records, Some(&self.cols))?)?)
        }
    }
}

fn pairwise(fits: &[&LoadedFit], records: &[PolicyRecord], ctx: &Context) -> Result<Vec<ComparisonReport>> {
    let correction = ctx.config.compare.vuong_correction;
    let mut out = Vec::new();
    for i in 0..fits.len() {
        for j in i + 1..fits.len() {
            let (a, b) = (fits[i], fits[j]);
            let report = if nested(&a.fit, &a.cols, &b.fit, &b.cols) {
                lr_test(&a.fit, &b.fit)?.with_ids(&a.name, &b.name)
            } else if nested(&b.fit, &b.cols, &a.fit, &a.cols) {
                lr_test(&b.fit, &a.fit)?.with_ids(&b.name, &a.name)
            } else {
                let ids = (a.name.clone(), b.name.clone());
                let (la, lb) = (a.pointwise(records)?, b.pointwise(records)?);
                vuong_from_pointwise(ids, &la, &lb, (a.fit.df, b.fit.df), correction)?
            };
            out.push(report);
        }
    }
    Ok(out)
}

pub fn compare(ctx: &Context) -> Result<String> {
    let c = &ctx.config.compare;
    let records = parse_portfolio(required(&c.portfolio, "compare.portfolio")?)?;
    if c.fits.len() < 2 {
        return Err(CliError::Config("compare needs at least two fits".into()));
    }
    let fits: Vec<LoadedFit> = c
        .fits
        .iter()
        .map(|p| {
            let fit = load_fit(p)?;
            let cols = fit_columns(&fit)?;
            Ok(LoadedFit { name: fit_name(p), fit, cols })
        })
        .collect::<Result<_>>()?;
    let freq: Vec<&LoadedFit> = fits.iter().filter(|f| f.fit.family().is_frequency()).collect();
    let sev: Vec<&LoadedFit> = fits.iter().filter(|f| !f.fit.family().is_frequency()).collect();

    let observed = observed_frequencies(&records);
    let mut simulations: Vec<(String, SimulationSummary)> = Vec::new();
    if c.simulation && !freq.is_empty() {
        let n = observed.total() as usize;
        for f in &freq {
            let summary = match &f.fit.params {
                FittedParams::KinbmDist(p) => {
                    let dist = p.to_distribution()?;
                    simulation_mse(&dist, &observed, c.reps, n, ctx.seed)?
                }
                FittedParams::KinbmReg(p) => {
                    let data = count_data(&records, Some(&f.cols))?;
                    let rows: Vec<Vec<f64>> = (0..data.len()).map(|i| data.row(i).to_vec()).collect();
                    let sim = RegressionSimulator { params: p, rows: &rows };
                    simulation_mse(&sim as &dyn CountSimulator, &observed, c.reps, n, ctx.seed)?
                }
                _ => unreachable!("frequency fits hold count models"),
            };
            simulations.push((f.name.clone(), summary));
        }
    }
    let mut tests = pairwise(&freq, &records, ctx)?;
    tests.extend(pairwise(&sev, &records, ctx)?);
    let criteria: Vec<CriteriaRow> = fits.iter().map(|f| CriteriaRow::from_fit(&f.name, &f.fit)).collect();

    if !simulations.is_empty() {
        ctx.write("compare_simulation.csv", &simulation_to_csv(&observed, &simulations))?;
        ctx.write("compare_simulation.txt", &simulation_to_text(&observed, &simulations))?;
    }
    ctx.write("compare_tests.csv", &comparisons_to_csv(&tests))?;
    ctx.write("compare_tests.txt", &comparisons_to_text(&tests))?;
    ctx.write("compare_criteria.csv", &criteria_to_csv(&criteria))?;
    ctx.write("compare_criteria.txt", &criteria_to_text(&criteria))?;

    Ok(match ctx.format {
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({
            "observed": observed.cells,
            "simulation": simulations,
            "tests": tests,
            "criteria": criteria,
        }))?,
        Format::Csv => {
            let mut out = String::new();
            if !simulations.is_empty() {
                out.push_str(&simulation_to_csv(&observed, &simulations));
                out.push('\n');
            }
            out.push_str(&comparisons_to_csv(&tests));
            out.push('\n');
            out.push_str(&criteria_to_csv(&criteria));
            out
        }
        Format::Text => {
            let mut out = String::new();
            if !simulations.is_empty() {
                let _ = writeln!(
                    out,
                    "Mean (MSE) of simulated frequencies, {} replicates of {} draws",
                    c.reps,
                    observed.total()
                );
                out.push_str(&simulation_to_text(&observed, &simulations));
                out.push('\n');
            }
            out.push_str("Pairwise tests\n");
            out.push_str(&comparisons_to_text(&tests));
            out.push('\n');
            out.push_str("Information criteria\n");
            out.push_str(&criteria_to_text(&criteria));
            out
        }
    })
}

fn frequency_set(path: &Path) -> Result<(FrequencyModel, Vec<usize>)> {
    let fit = load_fit(path)?;
    let cols = fit_columns(&fit)?;
    match fit.params {
        FittedParams::KinbmReg(p) | FittedParams::KinbmDist(p) => Ok((FrequencyModel::Regression(p), cols)),
        _ => Err(CliError::Config(format!("{} is not a frequency fit", path.display()))),
    }
}

fn severity_set(path: &Path) -> Result<(SeverityModel, Vec<usize>)> {
    let fit = load_fit(path)?;
    let cols = fit_columns(&fit)?;
    match fit.params {
        FittedParams::ParetoReg(p) => Ok((SeverityModel::Regression(p), cols)),
        FittedParams::ParetoDist(p) => Ok((SeverityModel::Distribution(p), cols)),
        _ => Err(CliError::Config(format!("{} is not a severity fit", path.display()))),
    }
}

fn model_set(freq: &Path, sev: Option<&Path>) -> Result<ModelSet> {
    let (frequency, fcols) = frequency_set(freq)?;
    let mut set = ModelSet::new(frequency, None);
    set.frequency_columns = Some(fcols);
    if let Some(s) = sev {
        let (severity, scols) = severity_set(s)?;
        set.severity = Some(severity);
        set.severity_columns = Some(scols);
    }
    Ok(set)
}

fn pricing_models(ctx: &Context) -> Result<Vec<PricingModel>> {
    let p = &ctx.config.price;
    if p.models.is_empty() {
        return Err(CliError::Config("price needs at least one [[price.models]] entry".into()));
    }
    p.models
        .iter()
        .map(|m| {
            if let Some(name) = &m.published {
                let mut model = published_pricing_model(name)?;
                if !m.name.is_empty() {
                    model.name = m.name.clone();
                }
                return Ok(model);
            }
            let with = required(&m.frequency_fit, "price.models.frequency_fit")?;
            let without = m.frequency_fit_without.as_deref();
            let name = if m.name.is_empty() { fit_name(with) } else { m.name.clone() };
            Ok(PricingModel {
                name,
                with_covariates: Some(model_set(with, m.severity_fit.as_deref())?),
                without_covariates: match without {
                    Some(w) => Some(model_set(
                        w,
                        m.severity_fit_without.as_deref().or(m.severity_fit.as_deref()),
                    )?),
                    None => None,
                },
            })
        })
        .collect()
}

fn category(c: &CategoryConfig) -> Result<Category> {
    let row = match (c.gender, c.age_class, c.price_class, c.area_class) {
        (None, None, None, None) => None,
        (Some(g), Some(a), Some(p), Some(r)) => Some(encode_design_row(&Profile::new(g, a, p, r)?)),
        _ => {
            return Err(CliError::Config(format!(
                "category {} must give all four covariates or none",
                c.label
            )))
        }
    };
    Ok(Category { label: c.label.clone(), row })
}

pub fn price_table(ctx: &Context) -> Result<PremiumTable> {
    let p = &ctx.config.price;
    let models = pricing_models(ctx)?;
    let categories = match &p.categories {
        Some(list) => list.iter().map(category).collect::<Result<Vec<_>>>()?,
        None => {
            let mut all = pricing_categories();
            if models.iter().any(|m| m.without_covariates.is_none()) {
                log::warn!("no fit without covariates given; dropping category A1");
                all.retain(|c| c.row.is_some());
            }
            all
        }
    };
    let total = match p.kind {
        PriceKind::Pure => Some(p.total_severity),
        PriceKind::Rate => None,
    };
    let scenarios: Vec<Scenario> = if !p.histories.is_empty() {
        p.histories
            .iter()
            .map(|h| Scenario {
                years: h.years(),
                pattern: if h.years() == 0 {
                    "-".into()
                } else {
                    h.counts()
                        .iter()
                        .enumerate()
                        .map(|(l, k)| format!("k{}={k}", l + 1))
                        .collect::<Vec<_>>()
                        .join(", ")
                },
                history: h.clone(),
            })
            .collect()
    } else {
        match p.layout {
            Layout::Cumulated => cumulated_scenarios(p.max_years, p.max_claims, total)?,
            Layout::PerYear => per_year_scenarios(&p.max_per_year, total)?,
        }
    };
    Ok(premium_table(&scenarios, &categories, &models, p.kind.into(), &p.quadrature)?)
}

pub fn price(ctx: &Context) -> Result<String> {
    let table = price_table(ctx)?;
    let csv = table.to_csv()?;
    let text = table.to_text();
    let json = serde_json::to_string_pretty(&table)?;
    ctx.write("price_table.csv", &csv)?;
    ctx.write("price_table.txt", &text)?;
    ctx.write("price_table.json", &json)?;
    Ok(match ctx.format {
        Format::Csv => csv,
        Format::Text => text,
        Format::Json => json,
    })
}
