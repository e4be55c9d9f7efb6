use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::base::{base_premium_dist, base_premium_reg};
use super::rate::{rate_premium_closed_q1, rate_premium_dist, rate_premium_reg};
use super::{ClaimHistory, Method, PremiumQuote};
use crate::distributions::{InflatedGammaPrior, ParetoMixParams};
use crate::error::{Error, Result};
use crate::numerics::QuadratureConfig;
use crate::regression::{KinbmRegParams, ParetoRegParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyModel {
    Regression(KinbmRegParams),
    Distribution(InflatedGammaPrior),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeverityModel {
    Regression(ParetoRegParams),
    Distribution(ParetoMixParams),
}

/// A frequency model and an optional severity model used together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSet {
    pub frequency: FrequencyModel,
    #[serde(default)]
    pub severity: Option<SeverityModel>,
    /// Positions in the category design row used by the frequency
    /// regression; every position when absent.
    #[serde(default)]
    pub frequency_columns: Option<Vec<usize>>,
    #[serde(default)]
    pub severity_columns: Option<Vec<usize>>,
}

impl ModelSet {
    pub fn new(frequency: FrequencyModel, severity: Option<SeverityModel>) -> Self {
        ModelSet { frequency, severity, frequency_columns: None, severity_columns: None }
    }
}

/// A named model with the variants used for categories with and without
/// covariate information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingModel {
    pub name: String,
    #[serde(default)]
    pub with_covariates: Option<ModelSet>,
    #[serde(default)]
    pub without_covariates: Option<ModelSet>,
}

impl PricingModel {
    fn for_category(&self, category: &Category) -> Result<&ModelSet> {
        let set = match category.row {
            Some(_) => self.with_covariates.as_ref(),
            None => self.without_covariates.as_ref().or(self.with_covariates.as_ref()),
        };
        set.ok_or_else(|| {
            Error::Contract(format!(
                "model {} has no variant for category {}",
                self.name, category.label
            ))
        })
    }
}

/// A policyholder profile: a full design row, or none when no covariate
/// information is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub label: String,
    pub row: Option<Vec<f64>>,
}

/// One row of a premium table: a claim history of `years` years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub years: usize,
    pub pattern: String,
    pub history: ClaimHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Rate,
    Pure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnHeader {
    pub model: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumRow {
    pub years: usize,
    pub pattern: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumTable {
    pub kind: TableKind,
    pub columns: Vec<ColumnHeader>,
    pub rows: Vec<PremiumRow>,
}

fn project(row: Option<&[f64]>, columns: Option<&[usize]>, ncol: usize) -> Result<Vec<f64>> {
    let Some(row) = row else {
        if ncol == 1 {
            return Ok(vec![1.0]);
        }
        return Err(Error::Contract(
            "a regression with covariates needs a category design row".into(),
        ));
    };
    let out: Vec<f64> = match columns {
        Some(idx) => idx
            .iter()
            .map(|&i| {
                row.get(i).copied().ok_or(Error::DimensionMismatch { expected: i + 1, got: row.len() })
            })
            .collect::<Result<_>>()?,
        None => row.to_vec(),
    };
    if out.len() != ncol {
        return Err(Error::DimensionMismatch { expected: ncol, got: out.len() });
    }
    Ok(out)
}

fn rate_for(
    history: &ClaimHistory,
    category: &Category,
    set: &ModelSet,
    quad: &QuadratureConfig,
) -> Result<(f64, Method)> {
    match &set.frequency {
        FrequencyModel::Regression(p) => {
            let x = project(category.row.as_deref(), set.frequency_columns.as_deref(), p.ncol())?;
            if p.inflation() == 0.0 {
                Ok((rate_premium_closed_q1(history, &x, p)?, Method::ClosedForm))
            } else {
                Ok((rate_premium_reg(history, &x, p, quad)?, Method::Quadrature))
            }
        }
        FrequencyModel::Distribution(prior) => {
            Ok((rate_premium_dist(history, prior, quad)?, Method::Quadrature))
        }
    }
}

fn base_for(history: &ClaimHistory, category: &Category, set: &ModelSet) -> Result<f64> {
    match &set.severity {
        Some(SeverityModel::Regression(s)) => {
            let w = project(category.row.as_deref(), set.severity_columns.as_deref(), s.ncol())?;
            base_premium_reg(history, &w, s)
        }
        Some(SeverityModel::Distribution(s)) => base_premium_dist(history, s),
        None => Err(Error::Contract("a pure premium needs a severity model".into())),
    }
}

/// Rate, base and pure premium of one history under one model.
pub fn quote(
    history: &ClaimHistory,
    category: &Category,
    model: &PricingModel,
    quad: &QuadratureConfig,
) -> Result<PremiumQuote> {
    let set = model.for_category(category)?;
    let (rate, method) = rate_for(history, category, set, quad)?;
    let base = base_for(history, category, set)?;
    PremiumQuote::tagged(rate, method, base, Method::ClosedForm)
}

/// Premiums for every scenario under every (model, category) pair, with
/// columns ordered model-major.
pub fn premium_table(
    scenarios: &[Scenario],
    categories: &[Category],
    models: &[PricingModel],
    kind: TableKind,
    quad: &QuadratureConfig,
) -> Result<PremiumTable> {
    quad.validate()?;
    let mut columns = Vec::with_capacity(models.len() * categories.len());
    let mut cells = Vec::with_capacity(columns.capacity());
    for model in models {
        for category in categories {
            columns.push(ColumnHeader { model: model.name.clone(), category: category.label.clone() });
            cells.push((model, category));
        }
    }
    let rows = scenarios
        .par_iter()
        .map(|s| {
            let values = cells
                .iter()
                .map(|(model, category)| {
                    let set = model.for_category(category)?;
                    let (rate, _) = rate_for(&s.history, category, set, quad)?;
                    match kind {
                        TableKind::Rate => Ok(rate),
                        TableKind::Pure => Ok(rate * base_for(&s.history, category, set)?),
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(PremiumRow { years: s.years, pattern: s.pattern.clone(), values })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PremiumTable { kind, columns, rows })
}

fn new_policy() -> Scenario {
    Scenario { years: 0, pattern: "-".into(), history: ClaimHistory::empty() }
}

fn with_sizes(counts: Vec<u64>, total_severity: Option<f64>) -> Result<ClaimHistory> {
    let k: u64 = counts.iter().sum();
    match total_severity {
        Some(total) if k > 0 => {
            if !(total.is_finite() && total > 0.0) {
                return Err(Error::Domain(format!("total claim size must be positive, got {total}")));
            }
            let each = total / k as f64;
            let sizes = counts.iter().map(|&c| vec![each; c as usize]).collect();
            ClaimHistory::new(counts, sizes)
        }
        Some(_) => {
            let sizes = vec![Vec::new(); counts.len()];
            ClaimHistory::new(counts, sizes)
        }
        None => Ok(ClaimHistory::from_counts(counts)),
    }
}

/// Histories described by the cumulated claim count `K` over `t` years,
/// for `t ≤ max_years` and `K ≤ max_total`, led by the new-policyholder
/// row. All `K` claims are placed in the first year; with
/// `total_severity`, each claim has size `total_severity / K`.
pub fn cumulated_scenarios(
    max_years: usize,
    max_total: u64,
    total_severity: Option<f64>,
) -> Result<Vec<Scenario>> {
    let mut out = vec![new_policy()];
    for t in 1..=max_years {
        for k in 0..=max_total {
            let mut counts = vec![0; t];
            counts[0] = k;
            out.push(Scenario {
                years: t,
                pattern: format!("K={k}"),
                history: with_sizes(counts, total_severity)?,
            });
        }
    }
    Ok(out)
}

/// Histories listing the count of every year: for `t` years each yearly
/// count runs over `0..=max_per_year[t − 1]`, first year outermost.
pub fn per_year_scenarios(max_per_year: &[u64], total_severity: Option<f64>) -> Result<Vec<Scenario>> {
    let mut out = vec![new_policy()];
    for (i, &max) in max_per_year.iter().enumerate() {
        let t = i + 1;
        let base = max + 1;
        for idx in 0..base.pow(t as u32) {
            let counts: Vec<u64> = (0..t).map(|l| idx / base.pow((t - 1 - l) as u32) % base).collect();
            let pattern = counts
                .iter()
                .enumerate()
                .map(|(l, k)| format!("k{}={k}", l + 1))
                .collect::<Vec<_>>()
                .join(", ");
            out.push(Scenario { years: t, pattern, history: with_sizes(counts, total_severity)? });
        }
    }
    Ok(out)
}

impl PremiumTable {
    fn digits(&self) -> usize {
        match self.kind {
            TableKind::Rate => 4,
            TableKind::Pure => 3,
        }
    }

    fn column_label(c: &ColumnHeader) -> String {
        format!("{} {}", c.model, c.category)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["years".to_string(), "pattern".to_string()];
        header.extend(self.columns.iter().map(Self::column_label));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.years.to_string(), row.pattern.clone()];
            rec.extend(row.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Aligned plain-text layout, one column per (model, category).
    pub fn to_text(&self) -> String {
        let digits = self.digits();
        let mut grid: Vec<Vec<String>> = Vec::with_capacity(self.rows.len() + 1);
        let mut header = vec!["t".to_string(), "claims".to_string()];
        header.extend(self.columns.iter().map(Self::column_label));
        grid.push(header);
        for row in &self.rows {
            let mut line = vec![row.years.to_string(), row.pattern.clone()];
            line.extend(row.values.iter().map(|v| format!("{v:.digits$}")));
            grid.push(line);
        }
        let ncols = grid[0].len();
        let widths: Vec<usize> =
            (0..ncols).map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (i, line) in grid.iter().enumerate() {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, w))| if c < 2 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncols - 1)));
                out.push('\n');
            }
        }
        out
    }
}
