//! Maximum-likelihood fitting by EM: the k-inflated NB mixture regression
//! and distribution, and the Pareto mixture regression and distribution.

mod design;
mod em;
mod fit;
mod inference;
mod kinbm_em;
mod kinbm_reg;
mod pareto_reg;

pub use design::{CountData, SeverityData};
pub use fit::{FitConfig, FitResult, FittedParams, Family, Inference, InitStrategy, FIT_VERSION};
pub use kinbm_em::{e_step, em_fit_kinbm_dist, em_fit_kinbm_reg, m_step};
pub use kinbm_reg::{kinbm_reg_log_pmf, KinbmRegParams};
pub use pareto_reg::{em_fit_pareto_dist, em_fit_pareto_reg, ParetoRegParams};
