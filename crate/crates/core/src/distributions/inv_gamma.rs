use serde::{Deserialize, Serialize};

use super::{check_len, normalize_weights};
use crate::error::{Error, Result};
use crate::numerics::{ln_gamma, lse};

/// Mixture of inverse-gamma laws with shape ηⱼ and scale ηⱼ − 1, so each
/// component has mean one when ηⱼ > 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInvGamma")]
pub struct InvGammaMixParams {
    weights: Vec<f64>,
    shapes: Vec<f64>,
}

#[derive(Deserialize)]
struct RawInvGamma {
    weights: Vec<f64>,
    shapes: Vec<f64>,
}

impl TryFrom<RawInvGamma> for InvGammaMixParams {
    type Error = Error;
    fn try_from(raw: RawInvGamma) -> Result<Self> {
        InvGammaMixParams::new(raw.weights, raw.shapes)
    }
}

impl InvGammaMixParams {
    pub fn new(weights: Vec<f64>, shapes: Vec<f64>) -> Result<Self> {
        check_len(shapes.len(), weights.len())?;
        if let Some(s) = shapes.iter().find(|s| !(s.is_finite() && **s > 1.0)) {
            return Err(Error::InvalidParams(format!(
                "inverse-gamma shapes must exceed 1 so the scale η − 1 is positive, found {s}"
            )));
        }
        let weights = normalize_weights(&weights, "inverse-gamma mixture")?;
        Ok(InvGammaMixParams { weights, shapes })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn log_pdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("inverse-gamma density needs u > 0, got {u}")));
        }
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.shapes)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, &eta)| {
                let b = eta - 1.0;
                w.ln() + eta * b.ln() - (eta + 1.0) * u.ln() - b / u - ln_gamma(eta)
            })
            .collect();
        Ok(if terms.is_empty() { f64::NEG_INFINITY } else { lse(&terms) })
    }
}

pub fn inv_gamma_mix_pdf(u: f64, params: &InvGammaMixParams) -> Result<f64> {
    params.log_pdf(u).map(f64::exp)
}
