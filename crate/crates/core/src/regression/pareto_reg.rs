use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::design::SeverityData;
use super::em::{best_run, MixtureOps, Posterior};
use super::fit::{FitConfig, FitResult, FittedParams, InitStrategy};
use super::inference::{pareto_dist_inference, pareto_reg_inference};
use super::kinbm_em::{rounding, INNER_STEP_TOL, MAX_HALVINGS};
use super::kinbm_reg::dot;
use crate::distributions::{
    canonical_order, normalize_weights, stream_rng, InvGammaMixParams, ParetoMixParams,
};
use crate::error::{Error, Result};
use crate::numerics::lse;
use crate::par;

/// Bounds on ln γ in the regression form.
const LN_GAMMA_REG: f64 = 13.8;
/// Bounds on ln γ and ln α in the distribution form.
const LN_SCALE_DIST: f64 = 30.0;
const LN_ALPHA_DIST_MIN: f64 = -9.210_340_371_976_184;
const LN_ALPHA_DIST_MAX: f64 = 13.815_510_557_964_274;
/// Tail index used when every severity is identical.
const PINNED_ALPHA: f64 = 1e6;

/// Pareto mixture regression parameters.
///
/// Component `j` scales a claim by `exp(w·coef[j])` and has tail index
/// `tail_indices[j] > 1` with scale tied to `tail_indices[j] − 1`, so the
/// component mean is `exp(w·coef[j])`. The inverse-gamma mixing law with
/// the same weights and shapes is [`ParetoRegParams::prior`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParetoReg")]
pub struct ParetoRegParams {
    weights: Vec<f64>,
    tail_indices: Vec<f64>,
    coef: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawParetoReg {
    weights: Vec<f64>,
    tail_indices: Vec<f64>,
    coef: Vec<Vec<f64>>,
}

impl TryFrom<RawParetoReg> for ParetoRegParams {
    type Error = Error;
    fn try_from(raw: RawParetoReg) -> Result<Self> {
        ParetoRegParams::new(raw.weights, raw.tail_indices, raw.coef)
    }
}

impl ParetoRegParams {
    pub fn new(weights: Vec<f64>, tail_indices: Vec<f64>, coef: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Self::unsorted(weights, tail_indices, coef)?.canonical().0)
    }

    pub(crate) fn unsorted(
        weights: Vec<f64>,
        tail_indices: Vec<f64>,
        coef: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = weights.len();
        if tail_indices.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: tail_indices.len() });
        }
        if coef.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: coef.len() });
        }
        let weights = normalize_weights(&weights, "Pareto regression")?;
        if let Some(a) = tail_indices.iter().find(|a| !(a.is_finite() && **a > 1.0)) {
            return Err(Error::InvalidParams(format!(
                "regression tail indices must exceed 1, found {a}"
            )));
        }
        let ncol = coef[0].len();
        if ncol == 0 {
            return Err(Error::InvalidParams("coefficient rows need an intercept".into()));
        }
        if let Some(row) = coef.iter().find(|r| r.len() != ncol) {
            return Err(Error::DimensionMismatch { expected: ncol, got: row.len() });
        }
        if coef.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("coefficients must be finite".into()));
        }
        Ok(ParetoRegParams { weights, tail_indices, coef })
    }

    fn canonical(self) -> (Self, Vec<usize>) {
        let intercepts: Vec<f64> = self.coef.iter().map(|r| r[0]).collect();
        let perm = canonical_order(&self.tail_indices, &intercepts);
        let out = ParetoRegParams {
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
            tail_indices: perm.iter().map(|&i| self.tail_indices[i]).collect(),
            coef: perm.iter().map(|&i| self.coef[i].clone()).collect(),
        };
        (out, perm)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tail_indices(&self) -> &[f64] {
        &self.tail_indices
    }

    pub fn coef(&self) -> &[Vec<f64>] {
        &self.coef
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ncol(&self) -> usize {
        self.coef[0].len()
    }

    /// Free parameter count: weights, tail indices and coefficients.
    pub fn df(&self) -> usize {
        let m = self.len();
        (m - 1) + m + m * self.ncol()
    }

    /// The inverse-gamma mixing law of the latent severity scale.
    pub fn prior(&self) -> Result<InvGammaMixParams> {
        InvGammaMixParams::new(self.weights.clone(), self.tail_indices.clone())
    }

    fn check_row(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.ncol() {
            return Err(Error::DimensionMismatch { expected: self.ncol(), got: w.len() });
        }
        Ok(())
    }

    pub(crate) fn log_terms(&self, z: f64, w: &[f64], out: &mut [f64]) {
        for j in 0..self.len() {
            let gamma = self.tail_indices[j] - 1.0;
            out[j] = self.weights[j].ln() + pareto_reg_log_density(z, dot(w, &self.coef[j]), gamma);
        }
    }

    pub fn log_pdf(&self, z: f64, w: &[f64]) -> Result<f64> {
        self.check_row(w)?;
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("severity must be non-negative, got {z}")));
        }
        let mut terms = vec![0.0; self.len()];
        self.log_terms(z, w, &mut terms);
        Ok(lse(&terms))
    }

    /// Expected severity for design row `w`.
    pub fn mean(&self, w: &[f64]) -> Result<f64> {
        self.check_row(w)?;
        Ok(self.weights.iter().zip(&self.coef).map(|(r, d)| r * dot(w, d).exp()).sum())
    }
}

/// Component log density with `s = z e^{−b}` and `γ = α − 1`.
fn pareto_reg_log_density(z: f64, b: f64, gamma: f64) -> f64 {
    let s = z * (-b).exp();
    (gamma + 1.0).ln() + (gamma + 1.0) * gamma.ln() - b - (gamma + 2.0) * (s + gamma).ln()
}

/// Derivatives of one regression-form log density in `(b, γ)`.
pub(crate) struct RegDerivs {
    pub db: f64,
    pub dg: f64,
    pub dbb: f64,
    pub dbg: f64,
    pub dgg: f64,
}

pub(crate) fn pareto_reg_derivs(z: f64, b: f64, gamma: f64) -> RegDerivs {
    let s = z * (-b).exp();
    let sg = s + gamma;
    let g2 = gamma + 2.0;
    RegDerivs {
        db: -1.0 + g2 * s / sg,
        dg: 1.0 / (gamma + 1.0) + gamma.ln() + (gamma + 1.0) / gamma - sg.ln() - g2 / sg,
        dbb: -g2 * s * gamma / (sg * sg),
        dbg: s * (s - 2.0) / (sg * sg),
        dgg: -1.0 / ((gamma + 1.0) * (gamma + 1.0)) + 1.0 / gamma
            - 1.0 / (gamma * gamma)
            - 1.0 / sg
            - (s - 2.0) / (sg * sg),
    }
}

/// Derivatives of one distribution-form log density in `(α, γ)`.
pub(crate) struct DistDerivs {
    pub l: f64,
    pub da: f64,
    pub dg: f64,
    pub daa: f64,
    pub dag: f64,
    pub dgg: f64,
}

pub(crate) fn pareto_dist_derivs(z: f64, alpha: f64, gamma: f64) -> DistDerivs {
    let zg = z + gamma;
    DistDerivs {
        l: alpha.ln() + alpha * gamma.ln() - (alpha + 1.0) * zg.ln(),
        da: 1.0 / alpha + gamma.ln() - zg.ln(),
        dg: alpha / gamma - (alpha + 1.0) / zg,
        daa: -1.0 / (alpha * alpha),
        dag: 1.0 / gamma - 1.0 / zg,
        dgg: -alpha / (gamma * gamma) + (alpha + 1.0) / (zg * zg),
    }
}

/// Working distribution-form parameters, unsorted during EM.
#[derive(Debug, Clone)]
pub(crate) struct DistWork {
    pub weights: Vec<f64>,
    pub alphas: Vec<f64>,
    pub scales: Vec<f64>,
}

impl DistWork {
    pub(crate) fn new(weights: Vec<f64>, alphas: Vec<f64>, scales: Vec<f64>) -> Option<Self> {
        let ok = alphas.iter().chain(&scales).all(|v| v.is_finite() && *v > 0.0);
        ok.then_some(DistWork { weights, alphas, scales })
    }

    fn log_terms(&self, z: f64, out: &mut [f64]) {
        for j in 0..self.weights.len() {
            out[j] = self.weights[j].ln() + pareto_dist_derivs(z, self.alphas[j], self.scales[j]).l;
        }
    }
}

fn weighted_posterior<F>(n: usize, m: usize, terms_of: F) -> Posterior
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let parts = par::map_chunks(n, |range| {
        let mut resp = Vec::with_capacity(range.len() * m);
        let mut ll = 0.0;
        let mut terms = vec![0.0; m];
        for i in range {
            terms_of(i, &mut terms);
            let total = lse(&terms);
            ll += total;
            resp.extend(terms.iter().map(|t| (t - total).exp()));
        }
        (resp, ll)
    });
    let mut resp = Vec::with_capacity(n * m);
    let mut loglik = 0.0;
    for (r, ll) in parts {
        resp.extend(r);
        loglik += ll;
    }
    Posterior { resp, loglik }
}

pub(crate) fn pareto_reg_posterior(data: &SeverityData, params: &ParetoRegParams) -> Posterior {
    weighted_posterior(data.len(), params.len(), |i, t| params.log_terms(data.z()[i], data.row(i), t))
}

pub(crate) fn pareto_dist_posterior(z: &[f64], params: &DistWork) -> Posterior {
    weighted_posterior(z.len(), params.weights.len(), |i, t| params.log_terms(z[i], t))
}

fn masses(n: usize, m: usize, resp: &[f64]) -> Vec<f64> {
    par::sum_chunks(n, m, |range, acc| {
        for i in range {
            for j in 0..m {
                acc[j] += resp[i * m + j];
            }
        }
    })
}

fn complete<F>(n: usize, m: usize, resp: &[f64], terms_of: F) -> f64
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    par::sum_scalar(n, |range| {
        let mut terms = vec![0.0; m];
        let mut acc = 0.0;
        for i in range {
            terms_of(i, &mut terms);
            for j in 0..m {
                let r = resp[i * m + j];
                if r > 0.0 {
                    acc += r * terms[j];
                }
            }
        }
        acc
    })
}

/// Solves `(−H + λI) δ = g`, raising λ until the system is positive definite.
fn levenberg_step(neg_hess: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>> {
    let d = grad.len();
    let scale = neg_hess.diagonal().iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-12);
    let mut lambda = 0.0;
    for _ in 0..40 {
        let mut a = neg_hess.clone();
        for i in 0..d {
            a[(i, i)] += lambda + 1e-8 * scale;
        }
        if let Some(ch) = a.cholesky() {
            let step = ch.solve(grad);
            if step.iter().all(|v| v.is_finite()) {
                return Ok(step);
            }
        }
        lambda = if lambda == 0.0 { 1e-6 * scale } else { lambda * 10.0 };
    }
    Err(Error::SingularInformation("Pareto information could not be regularised".into()))
}

fn reg_objective(data: &SeverityData, w: &[f64], coef: &[f64], a: f64) -> f64 {
    let gamma = a.exp();
    par::sum_scalar(data.len(), |range| {
        range
            .filter(|&i| w[i] > 0.0)
            .map(|i| w[i] * pareto_reg_log_density(data.z()[i], dot(data.row(i), coef), gamma))
            .sum()
    })
}

fn update_reg_component(
    data: &SeverityData,
    w: &[f64],
    coef0: &[f64],
    alpha0: f64,
    cfg: &FitConfig,
) -> Result<(Vec<f64>, f64)> {
    let p = coef0.len();
    let d = p + 1;
    let mut coef = coef0.to_vec();
    let mut a = (alpha0 - 1.0).ln().clamp(-LN_GAMMA_REG, LN_GAMMA_REG);
    let mut f = reg_objective(data, w, &coef, a);
    for _ in 0..cfg.irls_max_inner {
        let gamma = a.exp();
        let acc = par::sum_chunks(data.len(), d + d * d, |range, acc| {
            for i in range {
                if w[i] == 0.0 {
                    continue;
                }
                let x = data.row(i);
                let r = pareto_reg_derivs(data.z()[i], dot(x, &coef), gamma);
                let ga = gamma * r.dg;
                let haa = gamma * gamma * r.dgg + ga;
                let hab = gamma * r.dbg;
                for u in 0..p {
                    acc[u] += w[i] * r.db * x[u];
                    for v in 0..p {
                        acc[d + u * d + v] += w[i] * r.dbb * x[u] * x[v];
                    }
                    acc[d + u * d + p] += w[i] * hab * x[u];
                    acc[d + p * d + u] += w[i] * hab * x[u];
                }
                acc[p] += w[i] * ga;
                acc[d + p * d + p] += w[i] * haa;
            }
        });
        let grad = DVector::from_column_slice(&acc[..d]);
        let neg_hess = -DMatrix::from_row_slice(d, d, &acc[d..]);
        let delta = levenberg_step(&neg_hess, &grad)?;
        let mut step = cfg.irls_step_damping;
        let mut moved = 0.0;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = coef.iter().zip(delta.iter()).map(|(c, s)| c + step * s).collect();
            let ca = (a + step * delta[p]).clamp(-LN_GAMMA_REG, LN_GAMMA_REG);
            let fc = reg_objective(data, w, &cand, ca);
            if fc >= f - rounding(f) {
                moved = delta.amax() * step;
                coef = cand;
                a = ca;
                f = fc;
                break;
            }
            step *= 0.5;
        }
        if moved <= INNER_STEP_TOL {
            break;
        }
    }
    Ok((coef, 1.0 + a.exp()))
}

fn dist_objective(z: &[f64], w: &[f64], la: f64, lg: f64) -> f64 {
    let (alpha, gamma) = (la.exp(), lg.exp());
    par::sum_scalar(z.len(), |range| {
        range.filter(|&i| w[i] > 0.0).map(|i| w[i] * pareto_dist_derivs(z[i], alpha, gamma).l).sum()
    })
}

fn update_dist_component(
    z: &[f64],
    w: &[f64],
    alpha0: f64,
    gamma0: f64,
    cfg: &FitConfig,
) -> Result<(f64, f64)> {
    let mut la = alpha0.ln().clamp(LN_ALPHA_DIST_MIN, LN_ALPHA_DIST_MAX);
    let mut lg = gamma0.ln().clamp(-LN_SCALE_DIST, LN_SCALE_DIST);
    let mut f = dist_objective(z, w, la, lg);
    for _ in 0..cfg.irls_max_inner {
        let (alpha, gamma) = (la.exp(), lg.exp());
        let acc = par::sum_chunks(z.len(), 5, |range, acc| {
            for i in range {
                if w[i] == 0.0 {
                    continue;
                }
                let r = pareto_dist_derivs(z[i], alpha, gamma);
                acc[0] += w[i] * alpha * r.da;
                acc[1] += w[i] * gamma * r.dg;
                acc[2] += w[i] * (alpha * alpha * r.daa + alpha * r.da);
                acc[3] += w[i] * alpha * gamma * r.dag;
                acc[4] += w[i] * (gamma * gamma * r.dgg + gamma * r.dg);
            }
        });
        let grad = DVector::from_column_slice(&acc[..2]);
        let neg_hess = -DMatrix::from_row_slice(2, 2, &[acc[2], acc[3], acc[3], acc[4]]);
        let delta = levenberg_step(&neg_hess, &grad)?;
        let mut step = cfg.irls_step_damping;
        let mut moved = 0.0;
        for _ in 0..=MAX_HALVINGS {
            let ca = (la + step * delta[0]).clamp(LN_ALPHA_DIST_MIN, LN_ALPHA_DIST_MAX);
            let cg = (lg + step * delta[1]).clamp(-LN_SCALE_DIST, LN_SCALE_DIST);
            let fc = dist_objective(z, w, ca, cg);
            if fc >= f - rounding(f) {
                moved = delta.amax() * step;
                la = ca;
                lg = cg;
                f = fc;
                break;
            }
            step *= 0.5;
        }
        if moved <= INNER_STEP_TOL {
            break;
        }
    }
    Ok((la.exp(), lg.exp()))
}

fn init_responsibilities(z: &[f64], m: usize, strategy: InitStrategy, seed: u64) -> Vec<f64> {
    let n = z.len();
    let mut resp = vec![0.0; n * m];
    match strategy {
        InitStrategy::MomentSplit => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
            for (rank, &i) in order.iter().enumerate() {
                let g = (rank * m / n).min(m - 1);
                resp[i * m + g] = 1.0;
            }
        }
        InitStrategy::RandomResponsibilities => {
            let mut rng = stream_rng(seed, 0);
            for row in resp.chunks_mut(m) {
                for v in row.iter_mut() {
                    *v = rng.sample::<f64, _>(Exp1) + 1e-12;
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    resp
}

/// Weighted mean of `z` and a Lomax tail index matching its dispersion.
fn moment_start(z: &[f64], w: &[f64]) -> (f64, f64) {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for (zi, wi) in z.iter().zip(w) {
        s0 += wi;
        s1 += wi * zi;
        s2 += wi * zi * zi;
    }
    if !(s0 > 0.0) {
        let n = z.len() as f64;
        s0 = n;
        s1 = z.iter().sum();
        s2 = z.iter().map(|v| v * v).sum();
    }
    let mean = s1 / s0;
    let cv2 = (s2 / s0 - mean * mean).max(0.0) / (mean * mean);
    let alpha = if cv2 > 1.0 + 1e-6 { 2.0 * cv2 / (cv2 - 1.0) } else { 10.0 };
    (mean, alpha.clamp(1.05, 1e3))
}

fn column(resp: &[f64], m: usize, j: usize) -> Vec<f64> {
    resp.chunks(m).map(|r| r[j]).collect()
}

struct ParetoRegOps<'a> {
    data: &'a SeverityData,
    m: usize,
    cfg: &'a FitConfig,
}

impl MixtureOps for ParetoRegOps<'_> {
    type Params = ParetoRegParams;

    fn width(&self) -> usize {
        self.m
    }

    fn total(&self) -> f64 {
        self.data.len() as f64
    }

    fn guarded(&self, _j: usize) -> bool {
        true
    }

    fn posterior(&self, params: &ParetoRegParams) -> Posterior {
        pareto_reg_posterior(self.data, params)
    }

    fn masses(&self, resp: &[f64]) -> Vec<f64> {
        masses(self.data.len(), self.m, resp)
    }

    fn m_step(&self, resp: &[f64], params: &ParetoRegParams, frozen: &[bool]) -> Result<ParetoRegParams> {
        let mass = self.masses(resp);
        let total: f64 = mass.iter().sum();
        let weights: Vec<f64> = mass.iter().map(|t| t / total).collect();
        let mut alphas = params.tail_indices().to_vec();
        let mut coef = params.coef().to_vec();
        for j in 0..self.m {
            if frozen[j] || !(mass[j] > 1e-12 * total) {
                continue;
            }
            let w = column(resp, self.m, j);
            let (c, a) = update_reg_component(self.data, &w, &coef[j], alphas[j], self.cfg)?;
            coef[j] = c;
            alphas[j] = a;
        }
        ParetoRegParams::unsorted(weights, alphas, coef)
    }

    fn complete_loglik(&self, resp: &[f64], params: &ParetoRegParams) -> f64 {
        complete(self.data.len(), self.m, resp, |i, t| {
            params.log_terms(self.data.z()[i], self.data.row(i), t)
        })
    }

    fn start(&self, strategy: InitStrategy, seed: u64) -> Result<(Vec<f64>, ParetoRegParams)> {
        let init = init_responsibilities(self.data.z(), self.m, strategy, seed);
        let mass = self.masses(&init);
        let total: f64 = mass.iter().sum();
        let mut alphas = Vec::with_capacity(self.m);
        let mut coef = Vec::with_capacity(self.m);
        for j in 0..self.m {
            let (mean, alpha) = moment_start(self.data.z(), &column(&init, self.m, j));
            alphas.push(alpha);
            let mut d = vec![0.0; self.data.ncol()];
            d[0] = mean.ln();
            coef.push(d);
        }
        let weights = mass.iter().map(|t| t / total).collect();
        Ok((init, ParetoRegParams::unsorted(weights, alphas, coef)?))
    }
}

struct ParetoDistOps<'a> {
    z: &'a [f64],
    m: usize,
    cfg: &'a FitConfig,
}

impl MixtureOps for ParetoDistOps<'_> {
    type Params = DistWork;

    fn width(&self) -> usize {
        self.m
    }

    fn total(&self) -> f64 {
        self.z.len() as f64
    }

    fn guarded(&self, _j: usize) -> bool {
        true
    }

    fn posterior(&self, params: &DistWork) -> Posterior {
        pareto_dist_posterior(self.z, params)
    }

    fn masses(&self, resp: &[f64]) -> Vec<f64> {
        masses(self.z.len(), self.m, resp)
    }

    fn m_step(&self, resp: &[f64], params: &DistWork, frozen: &[bool]) -> Result<DistWork> {
        let mass = self.masses(resp);
        let total: f64 = mass.iter().sum();
        let weights: Vec<f64> = mass.iter().map(|t| t / total).collect();
        let mut alphas = params.alphas.clone();
        let mut scales = params.scales.clone();
        for j in 0..self.m {
            if frozen[j] || !(mass[j] > 1e-12 * total) {
                continue;
            }
            let w = column(resp, self.m, j);
            let (a, g) = update_dist_component(self.z, &w, alphas[j], scales[j], self.cfg)?;
            alphas[j] = a;
            scales[j] = g;
        }
        Ok(DistWork { weights, alphas, scales })
    }

    fn complete_loglik(&self, resp: &[f64], params: &DistWork) -> f64 {
        complete(self.z.len(), self.m, resp, |i, t| params.log_terms(self.z[i], t))
    }

    fn start(&self, strategy: InitStrategy, seed: u64) -> Result<(Vec<f64>, DistWork)> {
        let init = init_responsibilities(self.z, self.m, strategy, seed);
        let mass = self.masses(&init);
        let total: f64 = mass.iter().sum();
        let mut alphas = Vec::with_capacity(self.m);
        let mut scales = Vec::with_capacity(self.m);
        for j in 0..self.m {
            let (mean, alpha) = moment_start(self.z, &column(&init, self.m, j));
            alphas.push(alpha);
            scales.push(mean * (alpha - 1.0));
        }
        let weights = mass.iter().map(|t| t / total).collect();
        Ok((init, DistWork { weights, alphas, scales }))
    }
}

fn check_size(n: usize, df: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParams("a Pareto mixture needs at least one component".into()));
    }
    if n == 0 {
        return Err(Error::EmptyInput("no severities".into()));
    }
    if n < 10 * df {
        return Err(Error::DataTooSmall { n, df, required: 10 * df });
    }
    Ok(())
}

fn all_equal(z: &[f64]) -> Option<f64> {
    let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo <= 1e-12 * hi).then_some(z[0])
}

fn reorder_rows(resp: &[f64], m: usize, perm: &[usize]) -> Vec<Vec<f64>> {
    resp.chunks(m).map(|r| perm.iter().map(|&old| r[old]).collect()).collect()
}

/// Fits a Pareto mixture regression with `m` components by EM.
pub fn em_fit_pareto_reg(data: &SeverityData, m: usize, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let df = (m.max(1) - 1) + m + m * data.ncol();
    check_size(data.len(), df, m)?;
    if let Some(z0) = all_equal(data.z()) {
        let mut d = vec![0.0; data.ncol()];
        d[0] = z0.ln();
        let params =
            ParetoRegParams::new(vec![1.0 / m as f64; m], vec![PINNED_ALPHA; m], vec![d; m])?;
        let post = pareto_reg_posterior(data, &params);
        return Ok(degenerate_fit(FittedParams::ParetoReg(params), post, df, data.len(), m, cfg));
    }
    let ops = ParetoRegOps { data, m, cfg };
    let (run, runs) = best_run(&ops, cfg)?;
    let (params, perm) = run.params.canonical();
    let flags: Vec<bool> = perm.iter().map(|&old| run.degenerate[old]).collect();
    let inference = if cfg.standard_errors && !flags.iter().any(|&f| f) {
        pareto_reg_inference(data, &params)
    } else {
        None
    };
    Ok(FitResult {
        params: FittedParams::ParetoReg(params),
        loglik: run.loglik,
        loglik_trace: run.trace,
        complete_loglik_trace: run.complete_trace,
        converged: run.converged,
        iterations: run.iterations,
        df,
        n_obs: data.len(),
        degenerate: (0..m).filter(|&j| flags[j]).collect(),
        seed: run.seed,
        runs,
        inference,
        covariates: Vec::new(),
        responsibilities: reorder_rows(&run.resp, m, &perm),
    })
}

/// Fits a Pareto mixture distribution with free tail indices and scales.
pub fn em_fit_pareto_dist(z: &[f64], m: usize, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if let Some(v) = z.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("severities must be positive, found {v}")));
    }
    let df = (m.max(1) - 1) + 2 * m;
    check_size(z.len(), df, m)?;
    if let Some(z0) = all_equal(z) {
        let scale = z0 * (PINNED_ALPHA - 1.0);
        let work = DistWork { weights: vec![1.0 / m as f64; m], alphas: vec![PINNED_ALPHA; m], scales: vec![scale; m] };
        let post = pareto_dist_posterior(z, &work);
        let params = ParetoMixParams::new(work.weights, work.alphas, work.scales)?;
        return Ok(degenerate_fit(FittedParams::ParetoDist(params), post, df, z.len(), m, cfg));
    }
    let ops = ParetoDistOps { z, m, cfg };
    let (run, runs) = best_run(&ops, cfg)?;
    let work = run.params;
    let perm = canonical_order(&work.alphas, &work.scales);
    let flags: Vec<bool> = perm.iter().map(|&old| run.degenerate[old]).collect();
    let params = ParetoMixParams::new(work.weights.clone(), work.alphas.clone(), work.scales.clone())?;
    let inference = if cfg.standard_errors && !flags.iter().any(|&f| f) {
        pareto_dist_inference(z, &params)
    } else {
        None
    };
    Ok(FitResult {
        params: FittedParams::ParetoDist(params),
        loglik: run.loglik,
        loglik_trace: run.trace,
        complete_loglik_trace: run.complete_trace,
        converged: run.converged,
        iterations: run.iterations,
        df,
        n_obs: z.len(),
        degenerate: (0..m).filter(|&j| flags[j]).collect(),
        seed: run.seed,
        runs,
        inference,
        covariates: Vec::new(),
        responsibilities: reorder_rows(&run.resp, m, &perm),
    })
}

fn degenerate_fit(
    params: FittedParams,
    post: Posterior,
    df: usize,
    n: usize,
    m: usize,
    cfg: &FitConfig,
) -> FitResult {
    log::warn!("all severities are equal; tail index pinned at {PINNED_ALPHA}");
    FitResult {
        params,
        loglik: post.loglik,
        loglik_trace: vec![post.loglik],
        complete_loglik_trace: Vec::new(),
        converged: true,
        iterations: 0,
        df,
        n_obs: n,
        degenerate: (0..m).collect(),
        seed: cfg.seed,
        runs: 0,
        inference: None,
        covariates: Vec::new(),
        responsibilities: post.resp.chunks(m).map(<[f64]>::to_vec).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let (z, b, g) = (3.7, 0.4, 1.9);
        let d = pareto_reg_derivs(z, b, g);
        let h = 1e-6;
        let fd = |f: &dyn Fn(f64, f64) -> f64| {
            ((f(b + h, g) - f(b - h, g)) / (2.0 * h), (f(b, g + h) - f(b, g - h)) / (2.0 * h))
        };
        let (lb, lg) = fd(&|b, g| pareto_reg_log_density(z, b, g));
        assert!((lb - d.db).abs() < 1e-7 && (lg - d.dg).abs() < 1e-7);
        let (bb, bg) = fd(&|b, g| pareto_reg_derivs(z, b, g).db);
        assert!((bb - d.dbb).abs() < 1e-7 && (bg - d.dbg).abs() < 1e-7);
        let (_, gg) = fd(&|b, g| pareto_reg_derivs(z, b, g).dg);
        assert!((gg - d.dgg).abs() < 1e-7);

        let (a, g) = (2.3, 5.0);
        let d = pareto_dist_derivs(z, a, g);
        let fd = |f: &dyn Fn(f64, f64) -> f64| {
            ((f(a + h, g) - f(a - h, g)) / (2.0 * h), (f(a, g + h) - f(a, g - h)) / (2.0 * h))
        };
        let (la, lg) = fd(&|a, g| pareto_dist_derivs(z, a, g).l);
        assert!((la - d.da).abs() < 1e-7 && (lg - d.dg).abs() < 1e-7);
        let (aa, ag) = fd(&|a, g| pareto_dist_derivs(z, a, g).da);
        assert!((aa - d.daa).abs() < 1e-7 && (ag - d.dag).abs() < 1e-7);
        let (_, gg) = fd(&|a, g| pareto_dist_derivs(z, a, g).dg);
        assert!((gg - d.dgg).abs() < 1e-7);
    }

    #[test]
    fn regression_density_matches_pareto_form() {
        // With b = 0 the regression density is a Lomax(α, α − 1) density.
        let p = ParetoRegParams::new(vec![1.0], vec![2.5], vec![vec![0.0]]).unwrap();
        let lomax = ParetoMixParams::regression_form(vec![1.0], vec![2.5]).unwrap();
        for z in [0.0, 0.3, 4.0] {
            assert!((p.log_pdf(z, &[1.0]).unwrap() - lomax.log_pdf(z).unwrap()).abs() < 1e-13);
        }
        // A shift b rescales z by e^{b}.
        let q = ParetoRegParams::new(vec![1.0], vec![2.5], vec![vec![0.7]]).unwrap();
        let z: f64 = 2.0;
        let want = lomax.log_pdf(z * (-0.7f64).exp()).unwrap() - 0.7;
        assert!((q.log_pdf(z, &[1.0]).unwrap() - want).abs() < 1e-13);
        assert!((q.mean(&[1.0]).unwrap() - 0.7f64.exp()).abs() < 1e-13);
        assert_eq!(q.df(), 2);
    }

    #[test]
    fn all_equal_severities_are_pinned() {
        let z = vec![5.0; 100];
        let fit = em_fit_pareto_dist(&z, 1, &FitConfig::default()).unwrap();
        let FittedParams::ParetoDist(p) = &fit.params else { panic!() };
        assert_eq!(p.tail_indices()[0], PINNED_ALPHA);
        assert!((p.mean() - 5.0).abs() < 1e-9);
        assert_eq!(fit.degenerate, vec![0]);
        let data = SeverityData::intercept_only(z).unwrap();
        let fit = em_fit_pareto_reg(&data, 1, &FitConfig::default()).unwrap();
        assert_eq!(fit.degenerate, vec![0]);
    }

    /// Profile MLE of a single Lomax: α̂(γ) = n / Σ ln(1 + z/γ), maximised
    /// over ln γ by golden-section search.
    fn profile_oracle(z: &[f64]) -> (f64, f64) {
        let n = z.len() as f64;
        let prof = |lg: f64| {
            let g = lg.exp();
            let t: f64 = z.iter().map(|v| (v / g).ln_1p()).sum();
            let a = n / t;
            (n * a.ln() - n * g.ln() - (a + 1.0) * t, a)
        };
        let f = |lg: f64| prof(lg).0;
        let (mut lo, mut hi) = (-10.0f64, 15.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if f(a) > f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        let lg = 0.5 * (lo + hi);
        (prof(lg).1, lg.exp())
    }

    #[test]
    fn single_pareto_matches_profile_oracle() {
        let truth = ParetoMixParams::new(vec![1.0], vec![3.0], vec![200.0]).unwrap();
        let z = truth.sample(4000, 7);
        let fit = em_fit_pareto_dist(&z, 1, &FitConfig::default()).unwrap();
        let FittedParams::ParetoDist(p) = &fit.params else { panic!() };
        let (a, g) = profile_oracle(&z);
        assert!((p.tail_indices()[0] / a - 1.0).abs() < 1e-4, "{} vs {a}", p.tail_indices()[0]);
        assert!((p.scales()[0] / g - 1.0).abs() < 1e-4, "{} vs {g}", p.scales()[0]);
        let se = fit.inference.as_ref().unwrap();
        assert!(se.get("alpha[0]").unwrap().1 > 0.0);

        // The intercept-only regression is the same model with γ = (α − 1) e^{b}.
        let data = SeverityData::intercept_only(z).unwrap();
        let reg = em_fit_pareto_reg(&data, 1, &FitConfig::default()).unwrap();
        let FittedParams::ParetoReg(q) = &reg.params else { panic!() };
        assert!((q.tail_indices()[0] / a - 1.0).abs() < 1e-4);
        assert!(((q.tail_indices()[0] - 1.0) * q.coef()[0][0].exp() / g - 1.0).abs() < 1e-4);
        assert!((reg.loglik - fit.loglik).abs() < 1e-6);
    }

    #[test]
    fn recovers_two_component_regression() {
        let truth = ParetoRegParams::new(
            vec![0.6, 0.4],
            vec![2.5, 6.0],
            vec![vec![6.0, 0.5], vec![4.0, -0.3]],
        )
        .unwrap();
        let n = 6000;
        let mut rng = stream_rng(99, 0);
        let mut z = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let x = (i % 2) as f64;
            let w = [1.0, x];
            let j = usize::from(rng.random::<f64>() >= truth.weights()[0]);
            let alpha = truth.tail_indices()[j];
            let g: f64 = rng.sample(rand_distr::Gamma::new(alpha, 1.0 / (alpha - 1.0)).unwrap());
            let e: f64 = rng.sample(Exp1);
            z.push(dot(&w, &truth.coef()[j]).exp() * e / g);
            rows.push(w.to_vec());
        }
        let data = SeverityData::new(z, rows).unwrap();
        let fit = em_fit_pareto_reg(&data, 2, &FitConfig::default()).unwrap();
        let FittedParams::ParetoReg(p) = &fit.params else { panic!() };
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8);
        }
        assert!((p.weights()[0] - 0.6).abs() < 0.1, "{p:?}");
        assert!((p.coef()[0][0] - 6.0).abs() < 0.3, "{p:?}");
        assert!((p.coef()[1][0] - 4.0).abs() < 0.3, "{p:?}");
        assert_eq!(fit.df, 1 + 2 + 4);
    }
}
