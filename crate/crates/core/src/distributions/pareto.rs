use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::stream_rng;
use super::{canonical_order, check_len, check_positive, normalize_weights};
use crate::error::{Error, Result};
use crate::numerics::lse;

/// Mixture of Pareto (Lomax) laws with density α γ^α / (z + γ)^{α+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPareto")]
pub struct ParetoMixParams {
    weights: Vec<f64>,
    tail_indices: Vec<f64>,
    scales: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPareto {
    weights: Vec<f64>,
    tail_indices: Vec<f64>,
    scales: Vec<f64>,
}

impl TryFrom<RawPareto> for ParetoMixParams {
    type Error = Error;
    fn try_from(raw: RawPareto) -> Result<Self> {
        ParetoMixParams::new(raw.weights, raw.tail_indices, raw.scales)
    }
}

impl ParetoMixParams {
    pub fn new(weights: Vec<f64>, tail_indices: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        check_len(tail_indices.len(), weights.len())?;
        check_len(scales.len(), weights.len())?;
        check_positive(&tail_indices, "Pareto tail indices")?;
        check_positive(&scales, "Pareto scales")?;
        let weights = normalize_weights(&weights, "Pareto mixture")?;
        let order = canonical_order(&tail_indices, &scales);
        Ok(ParetoMixParams {
            weights: order.iter().map(|&i| weights[i]).collect(),
            tail_indices: order.iter().map(|&i| tail_indices[i]).collect(),
            scales: order.iter().map(|&i| scales[i]).collect(),
        })
    }

    /// Regression-error form: each scale is tied to γ = α − 1, which
    /// requires α > 1.
    pub fn regression_form(weights: Vec<f64>, tail_indices: Vec<f64>) -> Result<Self> {
        if let Some(a) = tail_indices.iter().find(|a| !(**a > 1.0)) {
            return Err(Error::InvalidParams(format!(
                "regression-form tail indices must exceed 1, found {a}"
            )));
        }
        let scales = tail_indices.iter().map(|a| a - 1.0).collect();
        Self::new(weights, tail_indices, scales)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_indices(&self) -> &[f64] {
        &self.tail_indices
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Log density; `z = 0` is the boundary of the support and allowed.
    pub fn log_pdf(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("Pareto density needs z >= 0, got {z}")));
        }
        let terms: Vec<f64> = (0..self.len())
            .filter(|&j| self.weights[j] > 0.0)
            .map(|j| {
                let (a, g) = (self.tail_indices[j], self.scales[j]);
                self.weights[j].ln() + a.ln() + a * g.ln() - (a + 1.0) * (z + g).ln()
            })
            .collect();
        Ok(if terms.is_empty() { f64::NEG_INFINITY } else { lse(&terms) })
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let tail: f64 = (0..self.len())
            .map(|j| {
                let (a, g) = (self.tail_indices[j], self.scales[j]);
                self.weights[j] * (a * (g.ln() - (z + g).ln())).exp()
            })
            .sum();
        (1.0 - tail).clamp(0.0, 1.0)
    }

    /// Mixture mean; infinite when any weighted component has α ≤ 1.
    pub fn mean(&self) -> f64 {
        (0..self.len())
            .filter(|&j| self.weights[j] > 0.0)
            .map(|j| {
                let a = self.tail_indices[j];
                if a > 1.0 {
                    self.weights[j] * self.scales[j] / (a - 1.0)
                } else {
                    f64::INFINITY
                }
            })
            .sum()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                self.draw(&mut rng)
            })
            .collect()
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let s: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = self.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if s <= acc {
                j = i;
                break;
            }
        }
        let u: f64 = rng.random();
        let (a, g) = (self.tail_indices[j], self.scales[j]);
        // inverse CDF: z = γ((1 − u)^{−1/α} − 1)
        g * ((-(1.0 - u).ln() / a).exp_m1())
    }
}

pub fn pareto_mix_pdf(z: f64, params: &ParetoMixParams) -> Result<f64> {
    params.log_pdf(z).map(f64::exp)
}

pub fn pareto_mix_sample(n: usize, params: &ParetoMixParams, seed: u64) -> Vec<f64> {
    params.sample(n, seed)
}
