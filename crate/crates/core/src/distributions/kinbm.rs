use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::stream_rng;
use super::{canonical_order, check_len, check_positive, normalize_weights};
use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, ln_rising, lse, regularized_incomplete_beta};

/// k-inflated negative binomial mixture in distribution form.
///
/// `weights[0]` is the inflation mass at `k`; `weights[j]` for j ≥ 1 goes
/// with the NB component `(shapes[j-1], rates[j-1])`, whose pmf is
/// C(y+α−1, y) (τ/(α+τ))^α (α/(α+τ))^y with mean α²/τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKinbm")]
pub struct KinbmParams {
    k: u32,
    weights: Vec<f64>,
    shapes: Vec<f64>,
    rates: Vec<f64>,
}

#[derive(Deserialize)]
struct RawKinbm {
    k: u32,
    weights: Vec<f64>,
    shapes: Vec<f64>,
    rates: Vec<f64>,
}

impl TryFrom<RawKinbm> for KinbmParams {
    type Error = Error;
    fn try_from(raw: RawKinbm) -> Result<Self> {
        KinbmParams::new(raw.k, raw.weights, raw.shapes, raw.rates)
    }
}

impl KinbmParams {
    pub fn new(k: u32, weights: Vec<f64>, shapes: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "kINBM needs at least two weights (inflation plus one NB component), got {}",
                weights.len()
            )));
        }
        check_len(shapes.len(), weights.len() - 1)?;
        check_len(rates.len(), weights.len() - 1)?;
        check_positive(&shapes, "NB shapes")?;
        check_positive(&rates, "NB rates")?;
        let weights = normalize_weights(&weights, "kINBM")?;
        let order = canonical_order(&shapes, &rates);
        let mut sorted_w = vec![weights[0]];
        sorted_w.extend(order.iter().map(|&i| weights[i + 1]));
        Ok(KinbmParams {
            k,
            weights: sorted_w,
            shapes: order.iter().map(|&i| shapes[i]).collect(),
            rates: order.iter().map(|&i| rates[i]).collect(),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// All m weights; the first is the inflation mass.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inflation(&self) -> f64 {
        self.weights[0]
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Total number of mixture components, the inflation point included.
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn log_pmf(&self, y: u64) -> f64 {
        let mut terms = Vec::with_capacity(self.weights.len());
        if y == self.k as u64 && self.weights[0] > 0.0 {
            terms.push(self.weights[0].ln());
        }
        for j in 0..self.shapes.len() {
            let w = self.weights[j + 1];
            if w > 0.0 {
                terms.push(w.ln() + eq1_log_nb(y, self.shapes[j], self.rates[j]));
            }
        }
        if terms.is_empty() {
            return f64::NEG_INFINITY;
        }
        lse(&terms).min(0.0)
    }

    pub fn mean(&self) -> f64 {
        let nb: f64 = (0..self.shapes.len())
            .map(|j| self.weights[j + 1] * self.shapes[j] * self.shapes[j] / self.rates[j])
            .sum();
        self.weights[0] * self.k as f64 + nb
    }

    /// Upper bound of the MGF domain: min ln((α+τ)/α).
    pub fn mgf_radius(&self) -> f64 {
        self.shapes
            .iter()
            .zip(&self.rates)
            .map(|(a, t)| ((a + t) / a).ln())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mgf(&self, t: f64) -> Result<f64> {
        let radius = self.mgf_radius();
        if !(t < radius) {
            return Err(Error::Domain(format!(
                "MGF argument {t} outside the convergence region t < {radius}"
            )));
        }
        let em1 = t.exp_m1();
        let mut total = self.weights[0] * (t * self.k as f64).exp();
        for j in 0..self.shapes.len() {
            let (a, tau) = (self.shapes[j], self.rates[j]);
            total += self.weights[j + 1] * (a * (tau.ln() - (tau - a * em1).ln())).exp();
        }
        Ok(total)
    }

    pub fn cdf(&self, r: u64) -> f64 {
        let mut total = if r >= self.k as u64 { self.weights[0] } else { 0.0 };
        for j in 0..self.shapes.len() {
            let (a, tau) = (self.shapes[j], self.rates[j]);
            let x = tau / (a + tau);
            let ib = regularized_incomplete_beta(x, a, r as f64 + 1.0)
                .expect("shape and rate are validated positive");
            total += self.weights[j + 1] * ib;
        }
        total.clamp(0.0, 1.0)
    }

    /// Seeded draws following the inversion-on-weights scheme.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        let samplers: Vec<Gamma<f64>> = self
            .shapes
            .iter()
            .zip(&self.rates)
            .map(|(&a, &tau)| Gamma::new(a, a / tau).expect("validated gamma parameters"))
            .collect();
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, i);
                let s: f64 = rng.random();
                if s <= cumulative[0] {
                    return self.k as u64;
                }
                let j = cumulative[1..]
                    .iter()
                    .position(|&c| s <= c)
                    .unwrap_or(samplers.len() - 1);
                let lambda = samplers[j].sample(&mut rng);
                poisson_draw(lambda, &mut rng)
            })
            .collect()
    }
}

pub(crate) fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    match Poisson::new(lambda.min(1e15)) {
        Ok(p) => p.sample(rng) as u64,
        Err(_) => 0,
    }
}

/// Eq. (1)-parametrized NB log pmf.
fn eq1_log_nb(y: u64, alpha: f64, tau: f64) -> f64 {
    let log_sum = (alpha + tau).ln();
    let mut v = ln_rising(alpha, y) - ln_factorial(y) + alpha * (tau.ln() - log_sum);
    if y > 0 {
        v += y as f64 * (alpha.ln() - log_sum);
    }
    v
}

/// Negative binomial log pmf with shape `alpha` and mean `mu`.
pub fn nb_log_pmf(y: u64, alpha: f64, mu: f64) -> f64 {
    let log_sum = (alpha + mu).ln();
    let mut v = ln_rising(alpha, y) - ln_factorial(y) + alpha * (alpha.ln() - log_sum);
    if y > 0 {
        v += y as f64 * (mu.ln() - log_sum);
    }
    v
}

pub fn kinbm_log_pmf(y: u64, params: &KinbmParams) -> f64 {
    params.log_pmf(y)
}

pub fn kinbm_mean(params: &KinbmParams) -> f64 {
    params.mean()
}

pub fn kinbm_mgf(t: f64, params: &KinbmParams) -> Result<f64> {
    params.mgf(t)
}

pub fn kinbm_cdf(r: u64, params: &KinbmParams) -> f64 {
    params.cdf(r)
}

pub fn kinbm_sample(n: usize, params: &KinbmParams, seed: u64) -> Vec<u64> {
    params.sample(n, seed)
}
