//! Count and severity distributions: the k-inflated negative binomial
//! mixture, the gamma and inverse-gamma mixing laws, and the Pareto
//! mixture, with densities, moments and seeded samplers.

mod gamma_mix;
mod inv_gamma;
mod kinbm;
mod params_json;
mod pareto;
pub(crate) mod sampling;

pub use gamma_mix::{mix_gamma_log_pdf, mix_gamma_pdf, InflatedGammaPrior, MixGammaParams};
pub use inv_gamma::{inv_gamma_mix_pdf, InvGammaMixParams};
pub use kinbm::{
    kinbm_cdf, kinbm_log_pmf, kinbm_mean, kinbm_mgf, kinbm_sample, nb_log_pmf, KinbmParams,
};
pub use params_json::{params_from_json, params_to_json, ParamsDocument, PARAMS_VERSION};
pub use pareto::{pareto_mix_pdf, pareto_mix_sample, ParetoMixParams};
pub use sampling::{derive_seed, stream_rng};

pub(crate) use kinbm::poisson_draw;

use crate::error::{Error, Result};

/// Checks a probability vector. Sums off by more than 1e-9 but less than
/// 1e-2 are rescaled with a warning; anything further off is rejected.
pub(crate) fn normalize_weights(weights: &[f64], what: &str) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::InvalidParams(format!("{what}: weight vector is empty")));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParams(format!(
            "{what}: weights must be finite and non-negative, found {w}"
        )));
    }
    let total: f64 = weights.iter().sum();
    let gap = (total - 1.0).abs();
    if gap <= 1e-9 {
        return Ok(weights.to_vec());
    }
    if gap < 1e-2 {
        log::warn!("{what}: weights sum to {total}; renormalizing");
        return Ok(weights.iter().map(|w| w / total).collect());
    }
    Err(Error::InvalidParams(format!("{what}: weights sum to {total}, expected 1")))
}

pub(crate) fn check_positive(values: &[f64], name: &str) -> Result<()> {
    match values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(v) => Err(Error::InvalidParams(format!("{name} must be positive and finite, found {v}"))),
        None => Ok(()),
    }
}

pub(crate) fn check_len(len: usize, expected: usize) -> Result<()> {
    if len != expected {
        return Err(Error::DimensionMismatch { expected, got: len });
    }
    Ok(())
}

/// Stable ascending order of `keys`, breaking ties by `tiebreak`.
pub(crate) fn canonical_order(keys: &[f64], tiebreak: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(tiebreak[a].total_cmp(&tiebreak[b])));
    idx
}
