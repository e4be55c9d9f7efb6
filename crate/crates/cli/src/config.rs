//! Run configuration: a TOML file with one table per subcommand, overridden
//! by command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use kinbm::data_io::CovariateLaw;
use kinbm::model_selection::VuongCorrection;
use kinbm::numerics::QuadratureConfig;
use kinbm::premium::{ClaimHistory, TableKind};
use kinbm::regression::{FitConfig, KinbmRegParams, ParetoRegParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Seed used when neither the config nor the command line sets one.
pub const DEFAULT_SEED: u64 = 20_240_101;

/// Every configuration key, shown by `--help`.
pub const CONFIG_KEYS: &str = "\
Configuration file keys (TOML):
  seed, threads, format, out                global settings (flags take precedence)
  [simulate]
    policies, years, first_year             portfolio size and first calendar year
    preset                                  published regression used when no model is given (default 1INBM1)
    frequency = { k, omega, shapes, coef }  count regression; k omitted for no inflation
    frequency_columns                       design columns of the count model (0 = intercept,
                                            1 gender, 2 age, 3 price, 4 area); all when absent
    severity = { weights, tail_indices, coef }, severity_columns
    covariates = { gender, age, price, area }  class probabilities (uniform by default)
  [fit]
    portfolio, family (kinbm_dist | kinbm_reg | nbm | pareto_dist | pareto_reg)
    form (distribution | regression, for nbm), m, k, columns, name
    [fit.em] max_iter, loglik_tol, irls_max_inner, irls_step_damping,
             init_strategy (moment_split | random_responsibilities), n_restarts, seed,
             standard_errors
  [compare]
    portfolio, fits (list of fit JSON files), reps, simulation, vuong_correction (none | aic | schwarz)
  [price]
    kind (rate | pure), layout (cumulated | per_year), max_years, max_claims, max_per_year,
    total_severity, categories (list of { label, gender, age_class, price_class, area_class };
    a category without covariates omits them), histories (list of { counts, severities })
    [[price.models]] name, published, frequency_fit, frequency_fit_without,
                     severity_fit, severity_fit_without
    [price.quadrature] node_count, method (gauss_laguerre | adaptive), rel_tol, max_subdivisions
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub simulate: SimulateConfig,
    pub fit: FitSection,
    pub compare: CompareConfig,
    pub price: PriceConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub policies: usize,
    pub years: usize,
    pub first_year: i64,
    pub preset: String,
    pub frequency: Option<KinbmRegParams>,
    pub frequency_columns: Option<Vec<usize>>,
    pub severity: Option<ParetoRegParams>,
    pub severity_columns: Option<Vec<usize>>,
    pub covariates: CovariateLaw,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            policies: 8874,
            years: 1,
            first_year: 2011,
            preset: "1INBM1".into(),
            frequency: None,
            frequency_columns: None,
            severity: None,
            severity_columns: None,
            covariates: CovariateLaw::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FamilyChoice {
    KinbmDist,
    KinbmReg,
    Nbm,
    ParetoDist,
    ParetoReg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Distribution,
    #[default]
    Regression,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub portfolio: Option<PathBuf>,
    pub family: FamilyChoice,
    pub form: Form,
    /// Length of the component list: the inflation slot plus the NB
    /// components for count models, the Pareto components for severity.
    pub m: usize,
    pub k: u32,
    pub columns: Option<Vec<usize>>,
    pub name: Option<String>,
    pub em: FitConfig,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            portfolio: None,
            family: FamilyChoice::KinbmReg,
            form: Form::Regression,
            m: 2,
            k: 1,
            columns: None,
            name: None,
            em: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub portfolio: Option<PathBuf>,
    pub fits: Vec<PathBuf>,
    pub reps: usize,
    pub simulation: bool,
    pub vuong_correction: VuongCorrection,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            portfolio: None,
            fits: Vec::new(),
            reps: 200,
            simulation: true,
            vuong_correction: VuongCorrection::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Cumulated,
    PerYear,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceModelConfig {
    pub name: String,
    /// Name of a published parameter set such as `1INBM2`.
    pub published: Option<String>,
    pub frequency_fit: Option<PathBuf>,
    /// Fit used for categories without covariates; `frequency_fit` when absent.
    pub frequency_fit_without: Option<PathBuf>,
    pub severity_fit: Option<PathBuf>,
    pub severity_fit_without: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryConfig {
    pub label: String,
    #[serde(default)]
    pub gender: Option<u8>,
    #[serde(default)]
    pub age_class: Option<u8>,
    #[serde(default)]
    pub price_class: Option<u8>,
    #[serde(default)]
    pub area_class: Option<u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriceConfig {
    pub kind: PriceKind,
    pub layout: Layout,
    pub max_years: usize,
    pub max_claims: u64,
    /// Largest yearly count per year for the per-year layout.
    pub max_per_year: Vec<u64>,
    pub total_severity: f64,
    pub categories: Option<Vec<CategoryConfig>>,
    pub histories: Vec<ClaimHistory>,
    pub models: Vec<PriceModelConfig>,
    pub quadrature: QuadratureConfig,
}

impl Default for PriceConfig {
    fn default() -> Self {
        PriceConfig {
            kind: PriceKind::Rate,
            layout: Layout::Cumulated,
            max_years: 2,
            max_claims: 4,
            max_per_year: vec![4, 2],
            total_severity: 1000.0,
            categories: None,
            histories: Vec::new(),
            models: Vec::new(),
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriceKind {
    #[default]
    Rate,
    Pure,
}

impl From<PriceKind> for TableKind {
    fn from(k: PriceKind) -> Self {
        match k {
            PriceKind::Rate => TableKind::Rate,
            PriceKind::Pure => TableKind::Pure,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::ConfigSyntax { path: path.into(), source: e })
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("kinbm-out"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c.simulate.policies, 8874);
        assert_eq!(c.compare.reps, 200);
        assert_eq!(c.seed(), DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[fit]\nfamilly = \"nbm\"\n").is_err());
        assert!(toml::from_str::<RunConfig>("[fit.em]\nmax_iters = 3\n").is_err());
    }

    #[test]
    fn sections_parse() {
        let c: RunConfig = toml::from_str(
            r#"
            seed = 7
            [fit]
            family = "pareto_reg"
            m = 1
            columns = [0, 3]
            [fit.em]
            n_restarts = 0
            [price]
            layout = "per_year"
            [[price.models]]
            name = "x"
            published = "1INBM2"
            "#,
        )
        .unwrap();
        assert_eq!(c.seed(), 7);
        assert_eq!(c.fit.family, FamilyChoice::ParetoReg);
        assert_eq!(c.fit.em.n_restarts, 0);
        assert_eq!(c.price.layout, Layout::PerYear);
        assert_eq!(c.price.models[0].published.as_deref(), Some("1INBM2"));
    }
}
