//! Standard errors from the observed information, obtained by central
//! differences of the analytic observed-data score.

use nalgebra::DMatrix;

use super::design::{CountData, SeverityData};
use super::fit::Inference;
use super::kinbm_em::{posterior, AlphaTable};
use super::kinbm_reg::{dot, mean_of, KinbmRegParams};
use super::pareto_reg::{
    pareto_dist_derivs, pareto_dist_posterior, pareto_reg_derivs, pareto_reg_posterior, DistWork,
    ParetoRegParams,
};
use crate::distributions::ParetoMixParams;
use crate::par;

/// Square roots of the diagonal of the inverse negative Hessian of a
/// log-likelihood whose gradient is `grad`.
fn observed_se<G>(theta: &[f64], grad: G) -> Option<Vec<f64>>
where
    G: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let d = theta.len();
    let mut hess = DMatrix::zeros(d, d);
    let mut probe = theta.to_vec();
    for c in 0..d {
        let h = 1e-5 * theta[c].abs().max(1.0);
        probe[c] = theta[c] + h;
        let up = grad(&probe)?;
        probe[c] = theta[c] - h;
        let down = grad(&probe)?;
        probe[c] = theta[c];
        for r in 0..d {
            hess[(r, c)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    let neg = -(&hess + hess.transpose()) * 0.5;
    let cov = neg.cholesky()?.inverse();
    let se: Vec<f64> = (0..d).map(|i| cov[(i, i)].sqrt()).collect();
    se.iter().all(|v| v.is_finite()).then_some(se)
}

fn kinbm_from_theta(template: &KinbmRegParams, theta: &[f64]) -> Option<KinbmRegParams> {
    let nw = template.omega().len();
    let c = template.n_nb();
    let p = template.ncol();
    let omega = theta[..nw].to_vec();
    let shapes = theta[nw..nw + c].iter().map(|v| v.exp()).collect();
    let coef = theta[nw + c..].chunks(p).map(<[f64]>::to_vec).collect();
    KinbmRegParams::unsorted(template.k(), omega, shapes, coef).ok()
}

/// Observed-data score of a kINBM regression in `[ω, ln α, B]` order.
pub(crate) fn kinbm_score(data: &CountData, mult: &[f64], params: &KinbmRegParams) -> Vec<f64> {
    let m = params.m();
    let c = params.n_nb();
    let p = params.ncol();
    let nw = params.omega().len();
    let first = m - nw;
    let post = posterior(data, mult, params);
    let weights = params.weights();
    let ymax = data.y().iter().copied().max().unwrap_or(0);
    let tables: Vec<AlphaTable> = params.shapes().iter().map(|&a| AlphaTable::new(a, ymax)).collect();
    let len = nw + c + c * p;
    par::sum_chunks(data.len(), len, |range, acc| {
        for i in range {
            let r = &post.resp[i * m..(i + 1) * m];
            let w = mult[i];
            for s in 0..nw {
                acc[s] += w * (r[first + s] - weights[first + s]);
            }
            let y = data.y()[i];
            let yf = y as f64;
            let x = data.row(i);
            for j in 0..c {
                let rj = w * r[j + 1];
                if rj == 0.0 {
                    continue;
                }
                let a = params.shapes()[j];
                let mu = mean_of(dot(x, &params.coef()[j]));
                let am = a + mu;
                acc[nw + j] += rj * a * (tables[j].d1(y) + a.ln() + 1.0 - am.ln() - (a + yf) / am);
                let sb = rj * (yf - mu) * a / am;
                for (q, xv) in x.iter().enumerate() {
                    acc[nw + c + j * p + q] += sb * xv;
                }
            }
        }
    })
}

pub(crate) fn kinbm_inference(
    data: &CountData,
    mult: &[f64],
    params: &KinbmRegParams,
) -> Option<Inference> {
    let mut theta = params.omega().to_vec();
    theta.extend(params.shapes().iter().map(|a| a.ln()));
    theta.extend(params.coef().iter().flatten());
    let se = observed_se(&theta, |t| {
        let p = kinbm_from_theta(params, t)?;
        Some(kinbm_score(data, mult, &p))
    });
    let Some(se) = se else {
        log::warn!("observed information is not positive definite; no standard errors");
        return None;
    };
    let nw = params.omega().len();
    let c = params.n_nb();
    let mut names = Vec::with_capacity(theta.len());
    let mut estimates = Vec::with_capacity(theta.len());
    let mut std_errors = Vec::with_capacity(theta.len());
    for (s, w) in params.omega().iter().enumerate() {
        names.push(format!("omega[{s}]"));
        estimates.push(*w);
        std_errors.push(se[s]);
    }
    for (j, a) in params.shapes().iter().enumerate() {
        names.push(format!("alpha[{j}]"));
        estimates.push(*a);
        std_errors.push(a * se[nw + j]);
    }
    let mut idx = nw + c;
    for (j, row) in params.coef().iter().enumerate() {
        for (q, b) in row.iter().enumerate() {
            names.push(format!("beta[{j}][{q}]"));
            estimates.push(*b);
            std_errors.push(se[idx]);
            idx += 1;
        }
    }
    Some(Inference { names, estimates, std_errors })
}

/// Mixture-weight score with component 0 as baseline.
fn weight_score(resp: &[f64], m: usize, weights: &[f64], acc: &mut [f64], i: usize) {
    for s in 1..m {
        acc[s - 1] += resp[i * m + s] - weights[s];
    }
}

fn logits(weights: &[f64]) -> Vec<f64> {
    weights[1..].iter().map(|w| (w / weights[0]).ln()).collect()
}

fn softmax_from(logits: &[f64]) -> Vec<f64> {
    super::kinbm_reg::softmax_with_baseline(logits)
}

pub(crate) fn pareto_reg_inference(data: &SeverityData, params: &ParetoRegParams) -> Option<Inference> {
    let m = params.len();
    let p = params.ncol();
    if params.weights().iter().any(|&w| !(w > 0.0)) {
        return None;
    }
    let mut theta = logits(params.weights());
    theta.extend(params.tail_indices().iter().map(|a| (a - 1.0).ln()));
    theta.extend(params.coef().iter().flatten());
    let build = |t: &[f64]| -> Option<ParetoRegParams> {
        let weights = softmax_from(&t[..m - 1]);
        let alphas = t[m - 1..2 * m - 1].iter().map(|g| 1.0 + g.exp()).collect();
        let coef = t[2 * m - 1..].chunks(p).map(<[f64]>::to_vec).collect();
        ParetoRegParams::unsorted(weights, alphas, coef).ok()
    };
    let se = observed_se(&theta, |t| {
        let params = build(t)?;
        let post = pareto_reg_posterior(data, &params);
        let len = (m - 1) + m + m * p;
        Some(par::sum_chunks(data.len(), len, |range, acc| {
            for i in range {
                weight_score(&post.resp, m, params.weights(), acc, i);
                let w = data.row(i);
                for j in 0..m {
                    let r = post.resp[i * m + j];
                    if r == 0.0 {
                        continue;
                    }
                    let b = dot(w, &params.coef()[j]);
                    let gamma = params.tail_indices()[j] - 1.0;
                    let d = pareto_reg_derivs(data.z()[i], b, gamma);
                    acc[m - 1 + j] += r * gamma * d.dg;
                    for (q, wv) in w.iter().enumerate() {
                        acc[2 * m - 1 + j * p + q] += r * d.db * wv;
                    }
                }
            }
        }))
    })?;
    let mut names = Vec::new();
    let mut estimates = Vec::new();
    let mut std_errors = Vec::new();
    for s in 1..m {
        names.push(format!("omega[{}]", s - 1));
        estimates.push(theta[s - 1]);
        std_errors.push(se[s - 1]);
    }
    for (j, a) in params.tail_indices().iter().enumerate() {
        names.push(format!("alpha[{j}]"));
        estimates.push(*a);
        std_errors.push((a - 1.0) * se[m - 1 + j]);
    }
    let mut idx = 2 * m - 1;
    for (j, row) in params.coef().iter().enumerate() {
        for (q, d) in row.iter().enumerate() {
            names.push(format!("d[{j}][{q}]"));
            estimates.push(*d);
            std_errors.push(se[idx]);
            idx += 1;
        }
    }
    Some(Inference { names, estimates, std_errors })
}

pub(crate) fn pareto_dist_inference(z: &[f64], params: &ParetoMixParams) -> Option<Inference> {
    let m = params.len();
    if params.weights().iter().any(|&w| !(w > 0.0)) {
        return None;
    }
    let mut theta = logits(params.weights());
    theta.extend(params.tail_indices().iter().map(|a| a.ln()));
    theta.extend(params.scales().iter().map(|g| g.ln()));
    let se = observed_se(&theta, |t| {
        let weights = softmax_from(&t[..m - 1]);
        let alphas: Vec<f64> = t[m - 1..2 * m - 1].iter().map(|v| v.exp()).collect();
        let scales: Vec<f64> = t[2 * m - 1..].iter().map(|v| v.exp()).collect();
        let params = DistWork::new(weights, alphas, scales)?;
        let post = pareto_dist_posterior(z, &params);
        let len = (m - 1) + 2 * m;
        Some(par::sum_chunks(z.len(), len, |range, acc| {
            for i in range {
                weight_score(&post.resp, m, &params.weights, acc, i);
                for j in 0..m {
                    let r = post.resp[i * m + j];
                    if r == 0.0 {
                        continue;
                    }
                    let (a, g) = (params.alphas[j], params.scales[j]);
                    let d = pareto_dist_derivs(z[i], a, g);
                    acc[m - 1 + j] += r * a * d.da;
                    acc[2 * m - 1 + j] += r * g * d.dg;
                }
            }
        }))
    })?;
    let mut names = Vec::new();
    let mut estimates = Vec::new();
    let mut std_errors = Vec::new();
    for s in 1..m {
        names.push(format!("omega[{}]", s - 1));
        estimates.push(theta[s - 1]);
        std_errors.push(se[s - 1]);
    }
    for (j, a) in params.tail_indices().iter().enumerate() {
        names.push(format!("alpha[{j}]"));
        estimates.push(*a);
        std_errors.push(a * se[m - 1 + j]);
    }
    for (j, g) in params.scales().iter().enumerate() {
        names.push(format!("gamma[{j}]"));
        estimates.push(*g);
        std_errors.push(g * se[2 * m - 1 + j]);
    }
    Some(Inference { names, estimates, std_errors })
}
