use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::design::CountData;
use super::em::{best_run, expand_rows, permute_columns, MixtureOps, Posterior};
use super::fit::{FitConfig, FitResult, FittedParams, InitStrategy};
use super::inference::kinbm_inference;
use super::kinbm_reg::{dot, mass_logit, mean_of, KinbmRegParams, ETA_BOUND};
use crate::distributions::stream_rng;
use crate::error::{Error, Result};
use crate::numerics::{digamma, ln_gamma, lse, trigamma};
use crate::par;

const LN_ALPHA_MIN: f64 = -9.210_340_371_976_184; // ln 1e-4
const LN_ALPHA_MAX: f64 = 13.815_510_557_964_274; // ln 1e6
/// Largest parameter move that still counts as an inner-loop step.
pub(crate) const INNER_STEP_TOL: f64 = 1e-10;
pub(crate) const MAX_HALVINGS: usize = 30;
const TABLE_LIMIT: u64 = 4096;

pub(crate) fn posterior(data: &CountData, mult: &[f64], params: &KinbmRegParams) -> Posterior {
    let m = params.m();
    let log_w = params.log_weights();
    let parts = par::map_chunks(data.len(), |range| {
        let mut resp = Vec::with_capacity(range.len() * m);
        let mut ll = 0.0;
        let mut terms = vec![0.0; m];
        for i in range {
            params.log_terms(data.y()[i], data.row(i), &log_w, &mut terms);
            let total = lse(&terms);
            ll += mult[i] * total;
            resp.extend(terms.iter().map(|t| (t - total).exp()));
        }
        (resp, ll)
    });
    let mut resp = Vec::with_capacity(data.len() * m);
    let mut loglik = 0.0;
    for (r, ll) in parts {
        resp.extend(r);
        loglik += ll;
    }
    Posterior { resp, loglik }
}

/// Expected complete-data log-likelihood.
pub(crate) fn complete_loglik(
    data: &CountData,
    mult: &[f64],
    resp: &[f64],
    params: &KinbmRegParams,
) -> f64 {
    let m = params.m();
    let log_w = params.log_weights();
    par::sum_scalar(data.len(), |range| {
        let mut terms = vec![0.0; m];
        let mut acc = 0.0;
        for i in range {
            params.log_terms(data.y()[i], data.row(i), &log_w, &mut terms);
            for j in 0..m {
                let r = resp[i * m + j];
                if r > 0.0 {
                    acc += mult[i] * r * terms[j];
                }
            }
        }
        acc
    })
}

/// Posterior component probabilities `v̂_ij`, one row per observation over
/// the component list `[inflation, nb_1, .., nb_c]`.
pub fn e_step(data: &CountData, params: &KinbmRegParams) -> Result<Vec<Vec<f64>>> {
    check_design(data, params)?;
    let mult = vec![1.0; data.len()];
    let post = posterior(data, &mult, params);
    Ok(post.resp.chunks(params.m()).map(<[f64]>::to_vec).collect())
}

/// One M-step: closed-form weights, then damped Fisher scoring on each NB
/// component's coefficients and Newton steps on its log shape.
pub fn m_step(
    data: &CountData,
    responsibilities: &[Vec<f64>],
    params_prev: &KinbmRegParams,
    cfg: &FitConfig,
) -> Result<KinbmRegParams> {
    check_design(data, params_prev)?;
    if responsibilities.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: responsibilities.len() });
    }
    let m = params_prev.m();
    if let Some(row) = responsibilities.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: row.len() });
    }
    if cfg.irls_max_inner == 0 {
        return Ok(params_prev.clone());
    }
    let flat: Vec<f64> = responsibilities.iter().flatten().copied().collect();
    let mult = vec![1.0; data.len()];
    let frozen = vec![false; m];
    m_step_weighted(data, &mult, &flat, params_prev, cfg, &frozen)
}

fn check_design(data: &CountData, params: &KinbmRegParams) -> Result<()> {
    if data.ncol() != params.ncol() {
        return Err(Error::DimensionMismatch { expected: params.ncol(), got: data.ncol() });
    }
    Ok(())
}

pub(crate) fn column_masses(n: usize, m: usize, mult: &[f64], resp: &[f64]) -> Vec<f64> {
    par::sum_chunks(n, m, |range, acc| {
        for i in range {
            for j in 0..m {
                acc[j] += mult[i] * resp[i * m + j];
            }
        }
    })
}

pub(crate) fn m_step_weighted(
    data: &CountData,
    mult: &[f64],
    resp: &[f64],
    prev: &KinbmRegParams,
    cfg: &FitConfig,
    frozen: &[bool],
) -> Result<KinbmRegParams> {
    let m = prev.m();
    let n = data.len();
    let mass = column_masses(n, m, mult, resp);
    let total: f64 = mass.iter().sum();
    let omega: Vec<f64> = if prev.is_inflated() {
        mass[1..].iter().map(|&t| mass_logit(t, mass[0])).collect()
    } else {
        mass[2..].iter().map(|&t| mass_logit(t, mass[1])).collect()
    };
    let mut shapes = prev.shapes().to_vec();
    let mut coef = prev.coef().to_vec();
    for j in 0..prev.n_nb() {
        if frozen[j + 1] || !(mass[j + 1] > 1e-12 * total) {
            continue;
        }
        let w: Vec<f64> = (0..n).map(|i| mult[i] * resp[i * m + j + 1]).collect();
        let (a, b) = update_nb(data, &w, shapes[j], &coef[j], cfg)?;
        shapes[j] = a;
        coef[j] = b;
    }
    KinbmRegParams::unsorted(prev.k(), omega, shapes, coef)
}

/// Per-shape tables of ln (α)_y and the first two derivatives in α.
pub(crate) struct AlphaTable {
    alpha: f64,
    lr: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl AlphaTable {
    pub(crate) fn new(alpha: f64, ymax: u64) -> Self {
        let len = if ymax <= TABLE_LIMIT { ymax as usize + 1 } else { 0 };
        let (mut lr, mut d1, mut d2) =
            (Vec::with_capacity(len), Vec::with_capacity(len), Vec::with_capacity(len));
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for y in 0..len {
            lr.push(a);
            d1.push(b);
            d2.push(c);
            let v = alpha + y as f64;
            a += v.ln();
            b += 1.0 / v;
            c += 1.0 / (v * v);
        }
        AlphaTable { alpha, lr, d1, d2 }
    }

    fn lr(&self, y: u64) -> f64 {
        match self.lr.get(y as usize) {
            Some(v) => *v,
            None => ln_gamma(self.alpha + y as f64) - ln_gamma(self.alpha),
        }
    }

    pub(crate) fn d1(&self, y: u64) -> f64 {
        match self.d1.get(y as usize) {
            Some(v) => *v,
            None => digamma(self.alpha + y as f64) - digamma(self.alpha),
        }
    }

    fn d2(&self, y: u64) -> f64 {
        match self.d2.get(y as usize) {
            Some(v) => *v,
            None => trigamma(self.alpha) - trigamma(self.alpha + y as f64),
        }
    }
}

/// Weighted NB log-likelihood up to terms free of (α, β).
fn nb_objective(data: &CountData, w: &[f64], table: &AlphaTable, beta: &[f64]) -> f64 {
    let alpha = table.alpha;
    let a_ln_a = alpha * alpha.ln();
    par::sum_scalar(data.len(), |range| {
        let mut acc = 0.0;
        for i in range {
            if w[i] == 0.0 {
                continue;
            }
            let y = data.y()[i];
            let eta = dot(data.row(i), beta).clamp(-ETA_BOUND, ETA_BOUND);
            let yf = y as f64;
            acc += w[i] * (table.lr(y) + a_ln_a - (alpha + yf) * (alpha + eta.exp()).ln() + yf * eta);
        }
        acc
    })
}

fn update_nb(
    data: &CountData,
    w: &[f64],
    alpha0: f64,
    beta0: &[f64],
    cfg: &FitConfig,
) -> Result<(f64, Vec<f64>)> {
    let p = beta0.len();
    let ymax = (0..data.len()).filter(|&i| w[i] > 0.0).map(|i| data.y()[i]).max().unwrap_or(0);
    let mut alpha = alpha0.clamp(LN_ALPHA_MIN.exp(), LN_ALPHA_MAX.exp());
    let mut table = AlphaTable::new(alpha, ymax);
    let mut beta = beta0.to_vec();
    let mut q = nb_objective(data, w, &table, &beta);
    for _ in 0..cfg.irls_max_inner {

        // Fisher scoring on the coefficients.
        let acc = par::sum_chunks(data.len(), p + p * p, |range, acc| {
            for i in range {
                if w[i] == 0.0 {
                    continue;
                }
                let x = data.row(i);
                let mu = mean_of(dot(x, &beta));
                let y = data.y()[i] as f64;
                let s = w[i] * (y - mu) * alpha / (alpha + mu);
                let f = w[i] * mu * alpha / (alpha + mu);
                for a in 0..p {
                    acc[a] += s * x[a];
                    for b in 0..p {
                        acc[p + a * p + b] += f * x[a] * x[b];
                    }
                }
            }
        });
        let score = DVector::from_column_slice(&acc[..p]);
        let mut info = DMatrix::from_row_slice(p, p, &acc[p..]);
        let ridge = 1e-8 * info.trace();
        for a in 0..p {
            info[(a, a)] += ridge;
        }
        let delta = solve_spd(info, &score)?;
        let mut step = cfg.irls_step_damping;
        let mut moved = 0.0;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = beta.iter().zip(delta.iter()).map(|(b, d)| b + step * d).collect();
            let qc = nb_objective(data, w, &table, &cand);
            if qc >= q - rounding(q) {
                moved = delta.amax() * step;
                beta = cand;
                q = qc;
                break;
            }
            step *= 0.5;
        }

        // Newton on ln α with the observed information.
        let (g, h) = {
            let acc = par::sum_chunks(data.len(), 2, |range, acc| {
                for i in range {
                    if w[i] == 0.0 {
                        continue;
                    }
                    let y = data.y()[i];
                    let mu = mean_of(dot(data.row(i), &beta));
                    let yf = y as f64;
                    let am = alpha + mu;
                    acc[0] += w[i]
                        * (table.d1(y) + alpha.ln() + 1.0 - am.ln() - (alpha + yf) / am);
                    acc[1] += w[i]
                        * (-table.d2(y) + 1.0 / alpha - 2.0 / am + (alpha + yf) / (am * am));
                }
            });
            (acc[0], acc[1])
        };
        let ga = alpha * g;
        let ha = alpha * alpha * h + alpha * g;
        let raw = if ha < 0.0 { -ga / ha } else { ga.signum() };
        let mut step = raw.clamp(-3.0, 3.0) * cfg.irls_step_damping;
        for _ in 0..=MAX_HALVINGS {
            let la = (alpha.ln() + step).clamp(LN_ALPHA_MIN, LN_ALPHA_MAX);
            let cand = AlphaTable::new(la.exp(), ymax);
            let qc = nb_objective(data, w, &cand, &beta);
            if qc >= q - rounding(q) {
                moved = f64::max(moved, (la - alpha.ln()).abs());
                alpha = cand.alpha;
                table = cand;
                q = qc;
                break;
            }
            step *= 0.5;
        }

        if moved <= INNER_STEP_TOL {
            break;
        }
    }
    Ok((alpha, beta))
}

/// Slack for floating-point noise when comparing objective values.
pub(crate) fn rounding(q: f64) -> f64 {
    1e-14 * (1.0 + q.abs())
}

pub(crate) fn solve_spd(info: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if info.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularInformation("information matrix is not finite".into()));
    }
    if let Some(ch) = info.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    info.lu()
        .solve(rhs)
        .filter(|d| d.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            Error::SingularInformation("expected information is not invertible".into())
        })
}

/// Starting responsibilities, row-major over the component list.
fn init_responsibilities(
    data: &CountData,
    mult: &[f64],
    k: Option<u32>,
    c: usize,
    strategy: InitStrategy,
    seed: u64,
) -> Vec<f64> {
    let m = c + 1;
    let n = data.len();
    let at_k = |i: usize| k.is_some_and(|k| data.y()[i] == u64::from(k));
    let mut resp = vec![0.0; n * m];
    match strategy {
        InitStrategy::MomentSplit => {
            let mut rest: Vec<usize> = (0..n).filter(|&i| !at_k(i)).collect();
            for i in 0..n {
                if at_k(i) {
                    resp[i * m] = 1.0;
                }
            }
            rest.sort_by_key(|&i| (data.y()[i], i));
            let total: f64 = rest.iter().map(|&i| mult[i]).sum();
            let width = total / c as f64;
            let mut start = 0.0;
            for &i in &rest {
                let end = start + mult[i];
                for g in 0..c {
                    let lo = g as f64 * width;
                    let hi = if g + 1 == c { f64::INFINITY } else { lo + width };
                    let overlap = end.min(hi) - start.max(lo);
                    if overlap > 0.0 {
                        resp[i * m + g + 1] += overlap / mult[i];
                    }
                }
                start = end;
            }
        }
        InitStrategy::RandomResponsibilities => {
            let mut rng = stream_rng(seed, 0);
            for i in 0..n {
                let first = if at_k(i) { 0 } else { 1 };
                let row = &mut resp[i * m..(i + 1) * m];
                for v in row.iter_mut().skip(first) {
                    *v = rng.sample::<f64, _>(Exp1) + 1e-12;
                }
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    resp
}

/// Starting NB parameters from weighted count moments.
fn moment_params(
    data: &CountData,
    mult: &[f64],
    resp: &[f64],
    k: Option<u32>,
    c: usize,
) -> Result<KinbmRegParams> {
    let m = c + 1;
    let n = data.len();
    let ncol = data.ncol();
    let moments = |weight: &dyn Fn(usize) -> f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let w = weight(i);
            let y = data.y()[i] as f64;
            s0 += w;
            s1 += w * y;
            s2 += w * y * y;
        }
        (s0, s1, s2)
    };
    let overall = moments(&|i| mult[i]);
    let mut shapes = Vec::with_capacity(c);
    let mut coef = Vec::with_capacity(c);
    for j in 0..c {
        let mut mo = moments(&|i| mult[i] * resp[i * m + j + 1]);
        if !(mo.0 > 1e-9 * overall.0) {
            mo = overall;
        }
        let mean = mo.1 / mo.0;
        let var = (mo.2 / mo.0 - mean * mean).max(0.0);
        let alpha = if mean > 0.0 && var > mean * (1.0 + 1e-8) {
            mean * mean / (var - mean)
        } else {
            10.0
        };
        shapes.push(alpha.clamp(0.05, 100.0));
        let mut b = vec![0.0; ncol];
        b[0] = (mean + 0.1).ln();
        coef.push(b);
    }
    let mass = column_masses(n, m, mult, resp);
    let omega = if k.is_some() {
        mass[1..].iter().map(|&t| mass_logit(t, mass[0])).collect()
    } else {
        mass[2..].iter().map(|&t| mass_logit(t, mass[1])).collect()
    };
    KinbmRegParams::unsorted(k, omega, shapes, coef)
}

struct KinbmOps<'a> {
    data: &'a CountData,
    mult: &'a [f64],
    k: Option<u32>,
    c: usize,
    cfg: &'a FitConfig,
}

impl MixtureOps for KinbmOps<'_> {
    type Params = KinbmRegParams;

    fn width(&self) -> usize {
        self.c + 1
    }

    fn total(&self) -> f64 {
        self.mult.iter().sum()
    }

    fn guarded(&self, j: usize) -> bool {
        j > 0 || self.k.is_some()
    }

    fn posterior(&self, params: &KinbmRegParams) -> Posterior {
        posterior(self.data, self.mult, params)
    }

    fn masses(&self, resp: &[f64]) -> Vec<f64> {
        column_masses(self.data.len(), self.c + 1, self.mult, resp)
    }

    fn m_step(&self, resp: &[f64], params: &KinbmRegParams, frozen: &[bool]) -> Result<KinbmRegParams> {
        m_step_weighted(self.data, self.mult, resp, params, self.cfg, frozen)
    }

    fn complete_loglik(&self, resp: &[f64], params: &KinbmRegParams) -> f64 {
        complete_loglik(self.data, self.mult, resp, params)
    }

    fn start(&self, strategy: InitStrategy, seed: u64) -> Result<(Vec<f64>, KinbmRegParams)> {
        let init = init_responsibilities(self.data, self.mult, self.k, self.c, strategy, seed);
        let params = moment_params(self.data, self.mult, &init, self.k, self.c)?;
        Ok((init, params))
    }
}

/// Free parameter count for `c` NB components over `ncol` design columns.
pub(crate) fn kinbm_df(inflated: bool, c: usize, ncol: usize) -> usize {
    let logits = if inflated { c } else { c - 1 };
    logits + c + c * ncol
}

fn fit_counts(
    data: &CountData,
    m: usize,
    k: Option<u32>,
    cfg: &FitConfig,
    dist: bool,
) -> Result<FitResult> {
    cfg.validate()?;
    if m < 2 {
        return Err(Error::InvalidParams(format!(
            "the component list needs m >= 2 entries (inflation slot plus NB components), got {m}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyInput("no count observations".into()));
    }
    let c = m - 1;
    let df = kinbm_df(k.is_some(), c, data.ncol());
    let n = data.len();
    if n < 10 * df {
        return Err(Error::DataTooSmall { n, df, required: 10 * df });
    }
    let (unique, mult, map) = data.compress();
    let ops = KinbmOps { data: &unique, mult: &mult, k, c, cfg };
    let (run, runs) = best_run(&ops, cfg)?;
    let width = c + 1;
    let (fitted, perm) = run.params.canonical();
    let resp = permute_columns(&run.resp, width, 1, &perm);
    let mut flags = vec![run.degenerate[0]];
    flags.extend(perm.iter().map(|&old| run.degenerate[old + 1]));
    let degenerate = (0..width).filter(|&j| flags[j]).collect();
    let inference = if cfg.standard_errors && !flags.iter().any(|&f| f) {
        kinbm_inference(&unique, &mult, &fitted)
    } else {
        None
    };
    let responsibilities = expand_rows(&resp, width, &map);
    let params = if dist { FittedParams::KinbmDist(fitted) } else { FittedParams::KinbmReg(fitted) };
    Ok(FitResult {
        params,
        loglik: run.loglik,
        loglik_trace: run.trace,
        complete_loglik_trace: run.complete_trace,
        converged: run.converged,
        iterations: run.iterations,
        df,
        n_obs: n,
        degenerate,
        seed: run.seed,
        runs,
        inference,
        covariates: Vec::new(),
        responsibilities,
    })
}

/// Fits a kINBM regression with `m − 1` NB components by EM. `k = None`
/// fits the plain NB mixture (inflation weight fixed at zero).
pub fn em_fit_kinbm_reg(
    data: &CountData,
    m: usize,
    k: Option<u32>,
    cfg: &FitConfig,
) -> Result<FitResult> {
    fit_counts(data, m, k, cfg, false)
}

/// Fits the covariate-free kINBM distribution with `m − 1` NB components.
pub fn em_fit_kinbm_dist(y: &[u64], m: usize, k: Option<u32>, cfg: &FitConfig) -> Result<FitResult> {
    fit_counts(&CountData::intercept_only(y.to_vec()), m, k, cfg, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::KinbmParams;

    fn sample_reg(n: usize, seed: u64) -> (CountData, KinbmRegParams) {
        let truth = KinbmRegParams::from_weights(
            Some(1),
            &[0.15, 0.85],
            vec![1.5],
            vec![vec![-0.3, 0.2]],
        )
        .unwrap();
        let mut rng = stream_rng(seed, 0);
        let mut y = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let x1 = rng.random_range(1..=4) as f64;
            let row = vec![1.0, x1];
            let draw: f64 = rng.random();
            let v = if draw < 0.15 {
                1
            } else {
                let mu = truth.component_means(&row).unwrap()[0];
                let u = rand_distr::Distribution::sample(&rand_distr::Gamma::new(1.5, 1.0 / 1.5).unwrap(), &mut rng);
                crate::distributions::poisson_draw(mu * u, &mut rng)
            };
            y.push(v);
            rows.push(row);
        }
        (CountData::new(y, rows).unwrap(), truth)
    }

    #[test]
    fn e_step_matches_bayes_rule() {
        let params = KinbmRegParams::from_weights(
            Some(0),
            &[0.2, 0.5, 0.3],
            vec![0.8, 4.0],
            vec![vec![0.1, -0.2], vec![0.7, 0.1]],
        )
        .unwrap();
        let data = CountData::new(
            vec![0, 1, 3, 0, 7],
            vec![vec![1.0, 0.5], vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, -1.0], vec![1.0, 3.0]],
        )
        .unwrap();
        let resp = e_step(&data, &params).unwrap();
        let w = params.weights();
        for (i, row) in resp.iter().enumerate() {
            let y = data.y()[i];
            let x = data.row(i);
            let mut joint = vec![if y == 0 { w[0] } else { 0.0 }];
            for j in 0..2 {
                let mu = (x[0] * params.coef()[j][0] + x[1] * params.coef()[j][1]).exp();
                let a = params.shapes()[j];
                let pmf = (ln_gamma(y as f64 + a) - ln_gamma(a) - ln_gamma(y as f64 + 1.0)
                    + a * (a / (a + mu)).ln()
                    + y as f64 * (mu / (a + mu)).ln())
                .exp();
                joint.push(w[j + 1] * pmf);
            }
            let total: f64 = joint.iter().sum();
            for j in 0..3 {
                assert!((row[j] - joint[j] / total).abs() < 1e-12);
            }
            if y != 0 {
                assert_eq!(row[0], 0.0);
            }
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_inner_iterations_is_identity() {
        let (data, truth) = sample_reg(200, 1);
        let resp = e_step(&data, &truth).unwrap();
        let cfg = FitConfig { irls_max_inner: 0, ..FitConfig::default() };
        assert_eq!(m_step(&data, &resp, &truth, &cfg).unwrap(), truth);
    }

    #[test]
    fn weight_update_is_mean_responsibility() {
        let (data, truth) = sample_reg(500, 2);
        let resp = e_step(&data, &truth).unwrap();
        let f = resp.iter().map(|r| r[0]).sum::<f64>() / resp.len() as f64;
        let next = m_step(&data, &resp, &truth, &FitConfig::default()).unwrap();
        assert!((next.inflation() - f).abs() < 1e-12);
    }

    #[test]
    fn m_step_matches_weighted_nb_glm() {
        // All mass on one NB component: the update solves the weighted NB
        // score equations.
        let (data, _) = sample_reg(3000, 3);
        let start = KinbmRegParams::new(None, vec![], vec![1.0], vec![vec![0.0, 0.0]]).unwrap();
        let resp = vec![vec![0.0, 1.0]; data.len()];
        let cfg = FitConfig { irls_max_inner: 200, ..FitConfig::default() };
        let p = m_step(&data, &resp, &start, &cfg).unwrap();
        let (a, b) = (p.shapes()[0], &p.coef()[0]);
        let mut g = [0.0; 3];
        for i in 0..data.len() {
            let x = data.row(i);
            let y = data.y()[i] as f64;
            let mu = (b[0] + b[1] * x[1]).exp();
            g[0] += (y - mu) * a / (a + mu);
            g[1] += x[1] * (y - mu) * a / (a + mu);
            g[2] += digamma(a + y) - digamma(a) + a.ln() + 1.0 - (a + mu).ln() - (a + y) / (a + mu);
        }
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }

    #[test]
    fn constant_data_puts_all_mass_on_inflation() {
        let data = CountData::intercept_only(vec![1; 200]);
        let fit = em_fit_kinbm_reg(&data, 2, Some(1), &FitConfig::default()).unwrap();
        let p = fit.params.count_model().unwrap();
        assert!(p.inflation() > 1.0 - 1e-9);
        assert_eq!(fit.degenerate, vec![1]);
    }

    #[test]
    fn data_too_small() {
        let data = CountData::intercept_only(vec![0, 1, 2]);
        assert!(matches!(
            em_fit_kinbm_reg(&data, 2, Some(1), &FitConfig::default()),
            Err(Error::DataTooSmall { .. })
        ));
    }

    #[test]
    fn recovers_small_regression() {
        let (data, truth) = sample_reg(4000, 11);
        let fit = em_fit_kinbm_reg(&data, 2, Some(1), &FitConfig::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.df, 1 + 1 + 2);
        let p = fit.params.count_model().unwrap();
        assert!((p.inflation() - truth.inflation()).abs() < 0.05, "{}", p.inflation());
        for w in fit.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        for r in &fit.responsibilities {
            assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        let inf = fit.inference.as_ref().unwrap();
        let (b1, se) = inf.get("beta[0][1]").unwrap();
        assert!((b1 - 0.2).abs() < 4.0 * se, "{b1} ± {se}");
    }

    #[test]
    fn dist_fit_converts() {
        let truth = KinbmParams::new(1, vec![0.2, 0.8], vec![2.0], vec![4.0]).unwrap();
        let y = truth.sample(5000, 5);
        let fit = em_fit_kinbm_dist(&y, 2, Some(1), &FitConfig::default()).unwrap();
        assert_eq!(fit.df, 3);
        let d = fit.params.count_model().unwrap().to_distribution().unwrap();
        assert!((d.mean() - truth.mean()).abs() < 0.05);
    }
}
