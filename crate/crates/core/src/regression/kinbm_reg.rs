use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    canonical_order, nb_log_pmf, normalize_weights, poisson_draw, stream_rng, KinbmParams,
};
use crate::error::{Error, Result};
use crate::numerics::lse;

/// Bound on the linear predictor before exponentiation.
pub(crate) const ETA_BOUND: f64 = 50.0;

/// Bound on weight logits produced by fitting.
pub(crate) const LOGIT_BOUND: f64 = 50.0;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mean_of(eta: f64) -> f64 {
    eta.clamp(-ETA_BOUND, ETA_BOUND).exp()
}

/// Softmax over `[0, logits...]`, computed with a max shift.
pub(crate) fn softmax_with_baseline(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().copied().fold(0.0f64, f64::max);
    let mut out = Vec::with_capacity(logits.len() + 1);
    out.push((-top).exp());
    out.extend(logits.iter().map(|w| (w - top).exp()));
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    out
}

/// Logit of mass `tj` against baseline mass `t0`, clamped.
pub(crate) fn mass_logit(tj: f64, t0: f64) -> f64 {
    if !(tj > 0.0) {
        -LOGIT_BOUND
    } else if !(t0 > 0.0) {
        LOGIT_BOUND
    } else {
        (tj.ln() - t0.ln()).clamp(-LOGIT_BOUND, LOGIT_BOUND)
    }
}

/// kINBM regression parameters.
///
/// The component list is `[inflation, nb_1, .., nb_c]`. With an inflation
/// point `k`, `omega[j]` is the logit of NB component `j` against the
/// inflation mass. Without one (the plain NB mixture) the inflation weight
/// is zero and `omega` holds the `c − 1` logits of components `2..c`
/// against the first NB component. Component `j` has mean `exp(x·coef[j])`
/// and shape `shapes[j]`; components are kept sorted by ascending shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKinbmReg")]
pub struct KinbmRegParams {
    k: Option<u32>,
    omega: Vec<f64>,
    shapes: Vec<f64>,
    coef: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawKinbmReg {
    k: Option<u32>,
    omega: Vec<f64>,
    shapes: Vec<f64>,
    coef: Vec<Vec<f64>>,
}

impl TryFrom<RawKinbmReg> for KinbmRegParams {
    type Error = Error;
    fn try_from(raw: RawKinbmReg) -> Result<Self> {
        KinbmRegParams::new(raw.k, raw.omega, raw.shapes, raw.coef)
    }
}

impl KinbmRegParams {
    pub fn new(k: Option<u32>, omega: Vec<f64>, shapes: Vec<f64>, coef: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::unsorted(k, omega, shapes, coef)?.canonical().0)
    }

    /// Builds the parameters from the full weight vector
    /// `[inflation, nb_1, .., nb_c]`; the inflation entry must be 0 when
    /// `k` is `None`.
    pub fn from_weights(
        k: Option<u32>,
        weights: &[f64],
        shapes: Vec<f64>,
        coef: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let c = shapes.len();
        if weights.len() != c + 1 {
            return Err(Error::DimensionMismatch { expected: c + 1, got: weights.len() });
        }
        let weights = normalize_weights(weights, "kINBM regression")?;
        let omega = match k {
            Some(_) => weights[1..].iter().map(|&w| raw_logit(w, weights[0])).collect(),
            None => {
                if weights[0] != 0.0 {
                    return Err(Error::InvalidParams(
                        "an inflation mass needs an inflation point k".into(),
                    ));
                }
                weights[2..].iter().map(|&w| raw_logit(w, weights[1])).collect()
            }
        };
        Self::new(k, omega, shapes, coef)
    }

    pub(crate) fn unsorted(
        k: Option<u32>,
        omega: Vec<f64>,
        shapes: Vec<f64>,
        coef: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let c = shapes.len();
        if c == 0 {
            return Err(Error::InvalidParams("at least one NB component is required".into()));
        }
        let want = if k.is_some() { c } else { c - 1 };
        if omega.len() != want {
            return Err(Error::DimensionMismatch { expected: want, got: omega.len() });
        }
        if coef.len() != c {
            return Err(Error::DimensionMismatch { expected: c, got: coef.len() });
        }
        let ncol = coef[0].len();
        if ncol == 0 {
            return Err(Error::InvalidParams("coefficient rows need an intercept".into()));
        }
        if let Some(row) = coef.iter().find(|r| r.len() != ncol) {
            return Err(Error::DimensionMismatch { expected: ncol, got: row.len() });
        }
        if let Some(a) = shapes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidParams(format!("NB shapes must be positive, found {a}")));
        }
        if omega.iter().chain(coef.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("logits and coefficients must be finite".into()));
        }
        Ok(KinbmRegParams { k, omega, shapes, coef })
    }

    /// Sorts NB components by shape and returns the permutation applied
    /// (`perm[new] = old`).
    pub(crate) fn canonical(self) -> (Self, Vec<usize>) {
        let intercepts: Vec<f64> = self.coef.iter().map(|r| r[0]).collect();
        let perm = canonical_order(&self.shapes, &intercepts);
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return (self, perm);
        }
        let nb = self.nb_weights();
        let shapes = perm.iter().map(|&i| self.shapes[i]).collect();
        let coef = perm.iter().map(|&i| self.coef[i].clone()).collect();
        let omega = match self.k {
            Some(_) => perm.iter().map(|&i| self.omega[i]).collect(),
            None => {
                let base = nb[perm[0]];
                perm[1..].iter().map(|&i| raw_logit(nb[i], base)).collect()
            }
        };
        (KinbmRegParams { k: self.k, omega, shapes, coef }, perm)
    }

    pub fn k(&self) -> Option<u32> {
        self.k
    }

    pub fn is_inflated(&self) -> bool {
        self.k.is_some()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn shapes(&self) -> &[f64] {
        &self.shapes
    }

    pub fn coef(&self) -> &[Vec<f64>] {
        &self.coef
    }

    /// Number of NB components.
    pub fn n_nb(&self) -> usize {
        self.shapes.len()
    }

    /// Number of entries in the component list, inflation slot included.
    pub fn m(&self) -> usize {
        self.shapes.len() + 1
    }

    /// Columns of the design row, intercept included.
    pub fn ncol(&self) -> usize {
        self.coef[0].len()
    }

    /// Full weight vector `[inflation, nb_1, .., nb_c]`.
    pub fn weights(&self) -> Vec<f64> {
        match self.k {
            Some(_) => softmax_with_baseline(&self.omega),
            None => {
                let mut w = vec![0.0];
                w.extend(softmax_with_baseline(&self.omega));
                w
            }
        }
    }

    pub fn inflation(&self) -> f64 {
        self.weights()[0]
    }

    pub fn nb_weights(&self) -> Vec<f64> {
        self.weights()[1..].to_vec()
    }

    /// Free parameter count: weight logits, shapes and coefficients.
    pub fn df(&self) -> usize {
        self.omega.len() + self.n_nb() + self.n_nb() * self.ncol()
    }

    /// Means `exp(x·B_j)` of the NB components.
    pub fn component_means(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_row(x)?;
        Ok(self.coef.iter().map(|b| mean_of(dot(x, b))).collect())
    }

    fn check_row(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.ncol() {
            return Err(Error::DimensionMismatch { expected: self.ncol(), got: x.len() });
        }
        Ok(())
    }

    /// Per-component log terms `ln w_j + ln f_j(y | x)` for the component
    /// list, given precomputed log weights.
    pub(crate) fn log_terms(&self, y: u64, x: &[f64], log_w: &[f64], out: &mut [f64]) {
        out[0] = match self.k {
            Some(k) if u64::from(k) == y => log_w[0],
            _ => f64::NEG_INFINITY,
        };
        for (j, (a, b)) in self.shapes.iter().zip(&self.coef).enumerate() {
            out[j + 1] = log_w[j + 1] + nb_log_pmf(y, *a, mean_of(dot(x, b)));
        }
    }

    pub(crate) fn log_weights(&self) -> Vec<f64> {
        self.weights().iter().map(|w| w.ln()).collect()
    }

    pub fn log_pmf(&self, y: u64, x: &[f64]) -> Result<f64> {
        self.check_row(x)?;
        let log_w = self.log_weights();
        let mut terms = vec![0.0; self.m()];
        self.log_terms(y, x, &log_w, &mut terms);
        Ok(lse(&terms))
    }

    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        let w = self.weights();
        let mu = self.component_means(x)?;
        let inflated = self.k.map_or(0.0, |k| w[0] * f64::from(k));
        Ok(inflated + w[1..].iter().zip(&mu).map(|(w, m)| w * m).sum::<f64>())
    }

    /// Distribution form of an intercept-only model: NB component `j` has
    /// Eq.-(1) rate `τ_j = α_j² / exp(β_0j)`. Without an inflation point the
    /// result carries a zero inflation weight at `k = 0`.
    pub fn to_distribution(&self) -> Result<KinbmParams> {
        if self.ncol() != 1 {
            return Err(Error::Contract(
                "only intercept-only models have a distribution form".into(),
            ));
        }
        let rates = self
            .shapes
            .iter()
            .zip(&self.coef)
            .map(|(a, b)| a * a / mean_of(b[0]))
            .collect();
        KinbmParams::new(self.k.unwrap_or(0), self.weights(), self.shapes.clone(), rates)
    }
}

impl KinbmRegParams {
    /// One count for design row `x`.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> u64 {
        let w = self.weights();
        let s: f64 = rng.random();
        let mut acc = w[0];
        if s <= acc {
            return u64::from(self.k.unwrap_or(0));
        }
        let mut j = self.n_nb() - 1;
        for (i, wi) in w[1..].iter().enumerate() {
            acc += wi;
            if s <= acc {
                j = i;
                break;
            }
        }
        let a = self.shapes[j];
        let u = Gamma::new(a, 1.0 / a).expect("validated shape").sample(rng);
        poisson_draw(mean_of(dot(x, &self.coef[j])) * u, rng)
    }

    /// One seeded count per design row; row `i` uses stream `i`.
    pub fn sample(&self, rows: &[Vec<f64>], seed: u64) -> Result<Vec<u64>> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.ncol()) {
            return Err(Error::DimensionMismatch { expected: self.ncol(), got: r.len() });
        }
        Ok(rows
            .par_iter()
            .enumerate()
            .map(|(i, x)| self.draw(x, &mut stream_rng(seed, i as u64)))
            .collect())
    }
}

fn raw_logit(w: f64, base: f64) -> f64 {
    let tiny = f64::MIN_POSITIVE;
    (w.max(tiny).ln() - base.max(tiny).ln()).clamp(-700.0, 700.0)
}

pub fn kinbm_reg_log_pmf(y: u64, x: &[f64], params: &KinbmRegParams) -> Result<f64> {
    params.log_pmf(y, x)
}
