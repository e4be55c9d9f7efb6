use serde::{Deserialize, Serialize};

use super::{check_len, check_positive, normalize_weights, KinbmParams};
use crate::error::{Error, Result};
use crate::numerics::{ln_gamma, lse};

/// Finite mixture of gamma laws.
///
/// The regression error form ties each rate to its shape so that every
/// component has mean one; the distribution form carries free rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixGamma")]
pub struct MixGammaParams {
    weights: Vec<f64>,
    shapes: Vec<f64>,
    rates: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMixGamma {
    weights: Vec<f64>,
    shapes: Vec<f64>,
    #[serde(default)]
    rates: Option<Vec<f64>>,
}

impl TryFrom<RawMixGamma> for MixGammaParams {
    type Error = Error;
    fn try_from(raw: RawMixGamma) -> Result<Self> {
        match raw.rates {
            Some(rates) => MixGammaParams::with_rates(raw.weights, raw.shapes, rates),
            None => MixGammaParams::new(raw.weights, raw.shapes),
        }
    }
}

impl MixGammaParams {
    /// Unit-mean mixture: every rate equals its shape.
    pub fn new(weights: Vec<f64>, shapes: Vec<f64>) -> Result<Self> {
        let rates = shapes.clone();
        Self::with_rates(weights, shapes, rates)
    }

    pub fn with_rates(weights: Vec<f64>, shapes: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        check_len(shapes.len(), weights.len())?;
        check_len(rates.len(), weights.len())?;
        check_positive(&shapes, "gamma shapes")?;
        check_positive(&rates, "gamma rates")?;
        let weights = normalize_weights(&weights, "mixture gamma")?;
        Ok(MixGammaParams { weights, shapes, rates })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        (0..self.len()).map(|j| self.weights[j] * self.shapes[j] / self.rates[j]).sum()
    }

    pub fn log_pdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("gamma mixture density needs u > 0, got {u}")));
        }
        let terms: Vec<f64> = (0..self.len())
            .filter(|&j| self.weights[j] > 0.0)
            .map(|j| {
                let (a, r) = (self.shapes[j], self.rates[j]);
                self.weights[j].ln() + a * r.ln() + (a - 1.0) * u.ln() - r * u - ln_gamma(a)
            })
            .collect();
        Ok(if terms.is_empty() { f64::NEG_INFINITY } else { lse(&terms) })
    }
}

pub fn mix_gamma_pdf(u: f64, params: &MixGammaParams) -> Result<f64> {
    params.log_pdf(u).map(f64::exp)
}

pub fn mix_gamma_log_pdf(u: f64, params: &MixGammaParams) -> Result<f64> {
    params.log_pdf(u)
}

/// A k-inflated Poisson whose mean is drawn from a gamma mixture: mass
/// `inflation` at `k`, otherwise Poisson(λ) with λ from `mixing`.
///
/// Integrating λ out gives a kINBM (see [`InflatedGammaPrior::to_kinbm`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflatedGammaPrior {
    k: Option<u32>,
    inflation: f64,
    mixing: MixGammaParams,
}

impl InflatedGammaPrior {
    /// `k = None` means no inflation point; `inflation` must then be 0.
    pub fn new(k: Option<u32>, inflation: f64, mixing: MixGammaParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&inflation) {
            return Err(Error::InvalidParams(format!(
                "inflation probability must lie in [0, 1], got {inflation}"
            )));
        }
        if k.is_none() && inflation != 0.0 {
            return Err(Error::InvalidParams(
                "an inflation mass needs an inflation point k".into(),
            ));
        }
        Ok(InflatedGammaPrior { k, inflation, mixing })
    }

    /// The mixing law whose marginal is the given kINBM. An NB component
    /// (α, τ) arises from a gamma with shape α and rate τ/α.
    pub fn from_kinbm(params: &KinbmParams) -> Result<Self> {
        let q: f64 = params.weights()[1..].iter().sum();
        let weights: Vec<f64> = if q > 0.0 {
            params.weights()[1..].iter().map(|w| w / q).collect()
        } else {
            vec![1.0 / params.shapes().len() as f64; params.shapes().len()]
        };
        let rates: Vec<f64> =
            params.shapes().iter().zip(params.rates()).map(|(a, t)| t / a).collect();
        let mixing = MixGammaParams::with_rates(weights, params.shapes().to_vec(), rates)?;
        Self::new(Some(params.k()), params.inflation(), mixing)
    }

    /// Marginal count law, defined when an inflation point is present.
    pub fn to_kinbm(&self) -> Result<KinbmParams> {
        let k = self.k.unwrap_or(0);
        let q = 1.0 - self.inflation;
        let mut weights = vec![self.inflation];
        weights.extend(self.mixing.weights().iter().map(|w| w * q));
        let rates: Vec<f64> =
            self.mixing.shapes().iter().zip(self.mixing.rates()).map(|(a, r)| a * r).collect();
        KinbmParams::new(k, weights, self.mixing.shapes().to_vec(), rates)
    }

    pub fn k(&self) -> Option<u32> {
        self.k
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn mixing(&self) -> &MixGammaParams {
        &self.mixing
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_case() {
        let p = MixGammaParams::new(vec![1.0], vec![1.0]).unwrap();
        for &u in &[0.1, 1.0, 4.0] {
            assert!((mix_gamma_pdf(u, &p).unwrap() - (-u as f64).exp()).abs() < 1e-15);
        }
        assert!(mix_gamma_pdf(0.0, &p).is_err());
    }

    #[test]
    fn two_component_reference() {
        let p = MixGammaParams::new(vec![0.4, 0.6], vec![2.0, 5.0]).unwrap();
        let want = 0.489_955_658_237_630_460_897_7;
        assert!((mix_gamma_pdf(1.3, &p).unwrap() - want).abs() < 1e-14);
        assert!((p.mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kinbm_round_trip() {
        let k = KinbmParams::new(1, vec![0.2, 0.5, 0.3], vec![0.8, 3.0], vec![2.0, 7.0]).unwrap();
        let prior = InflatedGammaPrior::from_kinbm(&k).unwrap();
        let back = prior.to_kinbm().unwrap();
        for (a, b) in k.rates().iter().zip(back.rates()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in k.weights().iter().zip(back.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(InflatedGammaPrior::new(None, 0.1, prior.mixing().clone()).is_err());
    }
}
