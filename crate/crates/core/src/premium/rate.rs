use super::ClaimHistory;
use crate::distributions::InflatedGammaPrior;
use crate::error::{Error, Result};
use crate::numerics::{
    ln_factorial, ln_gamma, log_add_exp, log_integrate_half_line, lse, QuadratureConfig,
};
use crate::regression::KinbmRegParams;

/// One mixing component: the next-year risk parameter is `scale · u` with
/// `u ~ Gamma(shape, rate)` and prior weight `weight`.
struct Component {
    weight: f64,
    shape: f64,
    rate: f64,
    scale: f64,
}

/// Inflation point and mass of the per-year count law.
struct Inflation {
    k: Option<u32>,
    p: f64,
}

impl Inflation {
    fn of(k: Option<u32>, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("inflation mass {p} outside [0, 1]")));
        }
        Ok(Inflation { k, p })
    }
}

/// Distinct yearly counts with their multiplicities.
fn count_groups(counts: &[u64]) -> Vec<(u64, f64)> {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let mut groups: Vec<(u64, f64)> = Vec::new();
    for y in sorted {
        match groups.last_mut() {
            Some((v, n)) if *v == y => *n += 1.0,
            _ => groups.push((y, 1.0)),
        }
    }
    groups
}

/// Posterior mean of the next-year risk parameter, without normalisation.
fn posterior_mean(
    counts: &[u64],
    components: &[Component],
    infl: &Inflation,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if counts.is_empty() {
        return Ok(prior_mean(components));
    }
    let groups = count_groups(counts);
    let ln_p = infl.p.ln();
    let ln_q = (1.0 - infl.p).ln();
    let mut num = Vec::with_capacity(components.len());
    let mut den = Vec::with_capacity(components.len());
    for c in components.iter().filter(|c| c.weight > 0.0) {
        let ln_prior = c.weight.ln() + c.shape * c.rate.ln() - ln_gamma(c.shape);
        let ln_scale = c.scale.ln();
        let log_f = |u: f64| {
            if !(u > 0.0) {
                return f64::NEG_INFINITY;
            }
            let ln_u = u.ln();
            let lambda = c.scale * u;
            let mut v = ln_prior + (c.shape - 1.0) * ln_u - c.rate * u;
            for &(y, n) in &groups {
                let pois = if y == 0 {
                    -lambda
                } else {
                    -lambda + y as f64 * (ln_scale + ln_u) - ln_factorial(y)
                };
                let mut h = ln_q + pois;
                if infl.p > 0.0 && infl.k.is_some_and(|k| u64::from(k) == y) {
                    h = log_add_exp(ln_p, h);
                }
                v += n * h;
            }
            v
        };
        let d = log_integrate_half_line(log_f, quad)?;
        let n = log_integrate_half_line(|u| log_f(u) + u.ln(), quad)?;
        den.push(d);
        num.push(n + ln_scale);
    }
    let ln_den = lse(&den);
    if !ln_den.is_finite() {
        return Err(Error::Domain("claim history has zero probability under the model".into()));
    }
    Ok((lse(&num) - ln_den).exp())
}

fn prior_mean(components: &[Component]) -> f64 {
    components.iter().map(|c| c.weight * c.scale * c.shape / c.rate).sum()
}

fn check_counts(history: &ClaimHistory) -> Result<()> {
    if history.counts().iter().any(|&y| y > 1_000_000) {
        return Err(Error::Domain("yearly claim counts above 10^6 are not supported".into()));
    }
    Ok(())
}

fn regression_components(x: &[f64], params: &KinbmRegParams) -> Result<Vec<Component>> {
    let means = params.component_means(x)?;
    let q: f64 = params.nb_weights().iter().sum();
    Ok(params
        .nb_weights()
        .iter()
        .zip(params.shapes())
        .zip(means)
        .map(|((w, a), e)| Component { weight: w / q, shape: *a, rate: *a, scale: e })
        .collect())
}

fn prior_components(prior: &InflatedGammaPrior) -> Vec<Component> {
    let mix = prior.mixing();
    mix.weights()
        .iter()
        .zip(mix.shapes())
        .zip(mix.rates())
        .map(|((w, a), r)| Component { weight: *w, shape: *a, rate: *r, scale: 1.0 })
        .collect()
}

/// Posterior mean of next year's claim rate under a kINBM regression, in
/// claims per year. The inflation mass `p` and `q = 1 − p` come from the
/// model weights, and the NB weights divided by `q` weight the mixing law.
pub fn posterior_rate_reg(
    history: &ClaimHistory,
    x: &[f64],
    params: &KinbmRegParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_counts(history)?;
    let comps = regression_components(x, params)?;
    let infl = Inflation::of(params.k(), params.inflation())?;
    posterior_mean(history.counts(), &comps, &infl, quad)
}

/// Rate premium under a kINBM regression, by quadrature, relative to a new
/// policyholder with the same covariates.
pub fn rate_premium_reg(
    history: &ClaimHistory,
    x: &[f64],
    params: &KinbmRegParams,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if history.years() == 0 {
        params.component_means(x)?;
        return Ok(1.0);
    }
    let raw = posterior_rate_reg(history, x, params, quad)?;
    Ok(raw / prior_mean(&regression_components(x, params)?))
}

/// Rate premium of a model without inflation mass, in closed form.
pub fn rate_premium_closed_q1(
    history: &ClaimHistory,
    x: &[f64],
    params: &KinbmRegParams,
) -> Result<f64> {
    if params.inflation() > 0.0 {
        return Err(Error::Contract(format!(
            "the closed form needs zero inflation mass, model has {}",
            params.inflation()
        )));
    }
    let comps = regression_components(x, params)?;
    if history.years() == 0 {
        return Ok(1.0);
    }
    let t = history.years() as f64;
    let y = history.total_claims() as f64;
    let mut num = Vec::with_capacity(comps.len());
    let mut den = Vec::with_capacity(comps.len());
    for c in comps.iter().filter(|c| c.weight > 0.0) {
        let a = c.shape;
        let ln_e = c.scale.ln();
        let b = (a + t * c.scale).ln();
        let common = c.weight.ln() + a * a.ln() - ln_gamma(a) + y * ln_e;
        let lg = ln_gamma(a + y);
        den.push(common + lg - (a + y) * b);
        // Γ(a + y + 1) = (a + y) Γ(a + y)
        num.push(common + lg + (a + y).ln() - (a + y + 1.0) * b + ln_e);
    }
    Ok((lse(&num) - lse(&den)).exp() / prior_mean(&comps))
}

/// Posterior mean of the claim rate under an inflated Poisson with a
/// gamma-mixture rate and no covariates.
pub fn posterior_rate_dist(
    history: &ClaimHistory,
    prior: &InflatedGammaPrior,
    quad: &QuadratureConfig,
) -> Result<f64> {
    check_counts(history)?;
    let infl = Inflation::of(prior.k(), prior.inflation())?;
    posterior_mean(history.counts(), &prior_components(prior), &infl, quad)
}

/// Rate premium without covariates, relative to the prior mean rate.
pub fn rate_premium_dist(
    history: &ClaimHistory,
    prior: &InflatedGammaPrior,
    quad: &QuadratureConfig,
) -> Result<f64> {
    if history.years() == 0 {
        return Ok(1.0);
    }
    let raw = posterior_rate_dist(history, prior, quad)?;
    Ok(raw / prior_mean(&prior_components(prior)))
}
