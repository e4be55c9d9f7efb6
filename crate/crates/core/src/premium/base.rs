use std::sync::Once;

use super::ClaimHistory;
use crate::distributions::ParetoMixParams;
use crate::error::{Error, Result};
use crate::numerics::{ln_gamma, lse};
use crate::regression::ParetoRegParams;

fn claims_and_sizes(history: &ClaimHistory) -> Result<(f64, f64)> {
    if !history.has_severities() {
        return Err(Error::Contract(
            "a base premium needs the claim sizes behind every reported claim".into(),
        ));
    }
    Ok((history.total_claims() as f64, history.total_severity()))
}

fn check_tail(eta: f64) -> Result<()> {
    if !(eta > 1.0) {
        return Err(Error::Domain(format!(
            "tail index {eta} must exceed 1 for a finite base premium"
        )));
    }
    Ok(())
}

/// Base premium under a Pareto mixture regression.
///
/// Component `j` has tail index `η_j`, weight `φ_j` and scale `e_j =
/// exp(w·D_j)`; with `K` claims of total size `S` the posterior of the
/// latent scale is inverse gamma with shape `η_j + K` and scale
/// `η_j − 1 + S/e_j`.
pub fn base_premium_reg(history: &ClaimHistory, w: &[f64], sev: &ParetoRegParams) -> Result<f64> {
    let (k, s) = claims_and_sizes(history)?;
    if w.len() != sev.ncol() {
        return Err(Error::DimensionMismatch { expected: sev.ncol(), got: w.len() });
    }
    let means: Vec<f64> =
        sev.coef().iter().map(|d| d.iter().zip(w).map(|(a, b)| a * b).sum()).collect();
    let mut num = Vec::with_capacity(sev.len());
    let mut den = Vec::with_capacity(sev.len());
    for ((phi, eta), wd) in sev.weights().iter().zip(sev.tail_indices()).zip(means) {
        check_tail(*eta)?;
        if *phi == 0.0 {
            continue;
        }
        let b = eta - 1.0 + s * (-wd).exp();
        let common = phi.ln() + eta * (eta - 1.0).ln() - ln_gamma(*eta);
        let lg = ln_gamma(eta + k - 1.0);
        num.push(common + (1.0 - k) * wd + lg - (eta + k - 1.0) * b.ln());
        // Γ(η + K) = (η + K − 1) Γ(η + K − 1)
        den.push(common - k * wd + lg + (eta + k - 1.0).ln() - (eta + k) * b.ln());
    }
    Ok((lse(&num) - lse(&den)).exp())
}

static REMARK_NOTE: Once = Once::new();

/// Base premium without covariates from the tail indices and weights of a
/// Pareto mixture, with posterior scale `η_j + S`. The component scales of
/// `sev` are not used.
pub fn base_premium_dist(history: &ClaimHistory, sev: &ParetoMixParams) -> Result<f64> {
    let (k, s) = claims_and_sizes(history)?;
    REMARK_NOTE.call_once(|| {
        log::warn!(
            "distribution-form base premium uses posterior scale eta + S, \
             without the -1 of the regression form"
        );
    });
    let mut num = Vec::with_capacity(sev.len());
    let mut den = Vec::with_capacity(sev.len());
    for (phi, eta) in sev.weights().iter().zip(sev.tail_indices()) {
        check_tail(*eta)?;
        if *phi == 0.0 {
            continue;
        }
        let b = (eta + s).ln();
        let common = phi.ln() + eta * (eta - 1.0).ln() - ln_gamma(*eta);
        let lg = ln_gamma(eta + k - 1.0);
        num.push(common + lg - (eta + k - 1.0) * b);
        den.push(common + lg + (eta + k - 1.0).ln() - (eta + k) * b);
    }
    Ok((lse(&num) - lse(&den)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(sizes: &[&[f64]]) -> ClaimHistory {
        let counts = sizes.iter().map(|z| z.len() as u64).collect();
        ClaimHistory::new(counts, sizes.iter().map(|z| z.to_vec()).collect()).unwrap()
    }

    #[test]
    fn single_component_simplifies() {
        let sev = ParetoRegParams::new(vec![1.0], vec![3.2], vec![vec![6.0, 0.4]]).unwrap();
        let w = [1.0, 1.0];
        let e = 6.4f64.exp();
        assert!((base_premium_reg(&ClaimHistory::empty(), &w, &sev).unwrap() / e - 1.0).abs() < 1e-13);
        let h = history(&[&[300.0, 900.0], &[], &[50.0]]);
        let want = e * (3.2 + 1250.0 / e - 1.0) / (3.2 + 3.0 - 1.0);
        let got = base_premium_reg(&h, &w, &sev).unwrap();
        assert!((got / want - 1.0).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn two_components_match_direct_sum() {
        let sev = ParetoRegParams::new(
            vec![0.3, 0.7],
            vec![1.8, 7.5],
            vec![vec![5.0], vec![6.5]],
        )
        .unwrap();
        let h = history(&[&[120.0], &[2000.0, 40.0]]);
        let (k, s) = (3.0, 2160.0);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..2 {
            let (phi, eta) = (sev.weights()[j], sev.tail_indices()[j]);
            let e = sev.coef()[j][0].exp();
            let b = eta - 1.0 + s / e;
            let c = phi * (eta - 1.0f64).powf(eta) / crate::numerics::ln_gamma(eta).exp();
            num += c * e.powf(1.0 - k) * crate::numerics::ln_gamma(eta + k - 1.0).exp() / b.powf(eta + k - 1.0);
            den += c * e.powf(-k) * crate::numerics::ln_gamma(eta + k).exp() / b.powf(eta + k);
        }
        let got = base_premium_reg(&h, &[1.0], &sev).unwrap();
        assert!((got / (num / den) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grows_with_claim_size() {
        let sev = ParetoRegParams::new(vec![0.5, 0.5], vec![2.0, 5.0], vec![vec![6.0], vec![5.0]]).unwrap();
        let a = base_premium_reg(&history(&[&[100.0, 200.0]]), &[1.0], &sev).unwrap();
        let b = base_premium_reg(&history(&[&[100.0, 201.0]]), &[1.0], &sev).unwrap();
        assert!(b > a);
    }

    #[test]
    fn distribution_form_as_printed() {
        let sev = ParetoMixParams::new(vec![1.0], vec![4.0], vec![900.0]).unwrap();
        let empty = base_premium_dist(&ClaimHistory::empty(), &sev).unwrap();
        assert!((empty - 4.0 / 3.0).abs() < 1e-14);
        let h = history(&[&[10.0, 5.0]]);
        let got = base_premium_dist(&h, &sev).unwrap();
        assert!((got - (4.0 + 15.0) / (4.0 + 2.0 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn missing_sizes_and_small_tails_are_errors() {
        let sev = ParetoRegParams::new(vec![1.0], vec![3.0], vec![vec![6.0]]).unwrap();
        let h = ClaimHistory::from_counts(vec![1]);
        assert!(matches!(base_premium_reg(&h, &[1.0], &sev), Err(Error::Contract(_))));
        let heavy = ParetoMixParams::new(vec![1.0], vec![0.8], vec![10.0]).unwrap();
        assert!(matches!(base_premium_dist(&ClaimHistory::empty(), &heavy), Err(Error::Domain(_))));
    }
}
