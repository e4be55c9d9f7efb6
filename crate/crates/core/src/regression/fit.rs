use serde::{Deserialize, Serialize};

use super::design::{CountData, SeverityData};
use super::kinbm_reg::KinbmRegParams;
use super::pareto_reg::ParetoRegParams;
use crate::distributions::ParetoMixParams;
use crate::error::{Error, Result};

pub const FIT_VERSION: &str = "kinbm-fit-v1";

/// How the first EM run of a fit is initialised. Later restarts always
/// use random responsibilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Flat-Dirichlet responsibilities over the components each row can
    /// belong to.
    RandomResponsibilities,
    /// Rows at the inflation point go to the inflation component; the rest
    /// are split into count quantiles.
    #[default]
    MomentSplit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Absolute change in observed log-likelihood that ends the EM loop.
    pub loglik_tol: f64,
    pub irls_max_inner: usize,
    /// Initial step multiplier for inner Newton steps; halved whenever a
    /// step lowers the objective.
    pub irls_step_damping: f64,
    pub init_strategy: InitStrategy,
    pub n_restarts: usize,
    pub seed: u64,
    /// Compute standard errors from the observed information.
    pub standard_errors: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iter: 500,
            loglik_tol: 1e-8,
            irls_max_inner: 25,
            irls_step_damping: 1.0,
            init_strategy: InitStrategy::MomentSplit,
            n_restarts: 3,
            seed: 20_240_101,
            standard_errors: true,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("max_iter must be positive".into()));
        }
        if !(self.loglik_tol > 0.0) {
            return Err(Error::InvalidParams("loglik_tol must be positive".into()));
        }
        if !(self.irls_step_damping > 0.0 && self.irls_step_damping <= 1.0) {
            return Err(Error::InvalidParams("irls_step_damping must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    KinbmReg,
    KinbmDist,
    ParetoReg,
    ParetoDist,
}

impl Family {
    pub fn is_frequency(self) -> bool {
        matches!(self, Family::KinbmReg | Family::KinbmDist)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FittedParams {
    /// kINBM regression; `k = None` is the plain NB mixture.
    KinbmReg(KinbmRegParams),
    /// Intercept-only kINBM, convertible to the (α, τ) distribution form.
    KinbmDist(KinbmRegParams),
    ParetoReg(ParetoRegParams),
    ParetoDist(ParetoMixParams),
}

impl FittedParams {
    pub fn family(&self) -> Family {
        match self {
            FittedParams::KinbmReg(_) => Family::KinbmReg,
            FittedParams::KinbmDist(_) => Family::KinbmDist,
            FittedParams::ParetoReg(_) => Family::ParetoReg,
            FittedParams::ParetoDist(_) => Family::ParetoDist,
        }
    }

    /// Short model name: `NBM2`, `1INBM1` or `ParetoM1`.
    pub fn label(&self) -> String {
        match self {
            FittedParams::KinbmReg(p) | FittedParams::KinbmDist(p) => match p.k() {
                Some(k) => format!("{k}INBM{}", p.n_nb()),
                None => format!("NBM{}", p.n_nb()),
            },
            FittedParams::ParetoReg(p) => format!("ParetoM{}", p.len()),
            FittedParams::ParetoDist(p) => format!("ParetoM{}", p.len()),
        }
    }

    /// Number of mixture components with a free weight, the inflation
    /// point included when present.
    pub fn components(&self) -> usize {
        match self {
            FittedParams::KinbmReg(p) | FittedParams::KinbmDist(p) => {
                p.n_nb() + usize::from(p.is_inflated())
            }
            FittedParams::ParetoReg(p) => p.len(),
            FittedParams::ParetoDist(p) => p.len(),
        }
    }

    pub fn count_model(&self) -> Option<&KinbmRegParams> {
        match self {
            FittedParams::KinbmReg(p) | FittedParams::KinbmDist(p) => Some(p),
            _ => None,
        }
    }
}

/// Estimates with standard errors from the inverse observed information.
/// Shapes and tail indices are reported on their natural scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
}

impl Inference {
    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.estimates[i], self.std_errors[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    #[serde(flatten)]
    pub params: FittedParams,
    /// Final observed-data log-likelihood.
    pub loglik: f64,
    /// Observed-data log-likelihood at the start and after every iteration.
    pub loglik_trace: Vec<f64>,
    /// Expected complete-data log-likelihood after every M-step.
    pub complete_loglik_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub df: usize,
    pub n_obs: usize,
    /// Responsibility columns whose mass collapsed during fitting.
    pub degenerate: Vec<usize>,
    /// Seed of the winning EM run.
    pub seed: u64,
    /// Number of EM runs tried.
    pub runs: usize,
    #[serde(default)]
    pub inference: Option<Inference>,
    /// Names of the retained covariate columns after the intercept.
    #[serde(default)]
    pub covariates: Vec<String>,
    /// Posterior component probabilities, one row per observation. Kept in
    /// memory only.
    #[serde(skip)]
    pub responsibilities: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct FitEnvelope {
    version: String,
    #[serde(flatten)]
    fit: FitResult,
}

impl FitResult {
    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn to_json(&self) -> Result<String> {
        let env = FitEnvelope { version: FIT_VERSION.into(), fit: self.clone() };
        Ok(serde_json::to_string_pretty(&env)?)
    }

    pub fn from_json(text: &str) -> Result<FitResult> {
        let env: FitEnvelope = serde_json::from_str(text)?;
        if env.version != FIT_VERSION {
            return Err(Error::InvalidParams(format!(
                "unsupported fit document version {:?}, expected {FIT_VERSION:?}",
                env.version
            )));
        }
        Ok(env.fit)
    }

    /// Log-likelihood contribution of every count observation. The data must
    /// carry the model's covariate columns unless the model is intercept-only.
    pub fn pointwise_counts(&self, data: &CountData) -> Result<Vec<f64>> {
        let p = self.params.count_model().ok_or_else(|| {
            Error::Contract("count log-likelihoods need a frequency model".into())
        })?;
        let intercept_only = p.ncol() == 1;
        (0..data.len())
            .map(|i| {
                let row = if intercept_only { &[1.0][..] } else { data.row(i) };
                p.log_pmf(data.y()[i], row)
            })
            .collect()
    }

    /// Log-likelihood contribution of every claim severity.
    pub fn pointwise_severities(&self, data: &SeverityData) -> Result<Vec<f64>> {
        match &self.params {
            FittedParams::ParetoReg(p) => {
                let intercept_only = p.ncol() == 1;
                (0..data.len())
                    .map(|i| {
                        let row = if intercept_only { &[1.0][..] } else { data.row(i) };
                        p.log_pdf(data.z()[i], row)
                    })
                    .collect()
            }
            FittedParams::ParetoDist(p) => data.z().iter().map(|&z| p.log_pdf(z)).collect(),
            _ => Err(Error::Contract("severity log-likelihoods need a Pareto model".into())),
        }
    }
}
