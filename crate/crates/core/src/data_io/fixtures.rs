//! Published parameter estimates for the third-party liability portfolio
//! and the three pricing categories used with them.
//!
//! The printed values are rounded, so weights are renormalised on
//! construction and coefficients reported as not significant are 0. These
//! parameter sets are structural fixtures for layouts and diagnostics, not
//! numeric ground truth.

use super::{encode_design_row, Profile};
use crate::distributions::{InflatedGammaPrior, MixGammaParams, ParetoMixParams};
use crate::error::{Error, Result};
use crate::premium::{Category, FrequencyModel, ModelSet, PricingModel, SeverityModel};
use crate::regression::{KinbmRegParams, ParetoRegParams};

/// Model names with printed estimates in both distribution and regression form.
pub const FREQUENCY_MODELS: [&str; 13] = [
    "NBM1", "0INBM1", "1INBM1", "2INBM1", "3INBM1", "NBM2", "0INBM2", "1INBM2", "2INBM2", "3INBM2",
    "NBM3", "0INBM3", "1INBM3",
];

fn unknown(name: &str) -> Error {
    Error::InvalidParams(format!("no published estimates for model {name:?}"))
}

/// Splits a name such as `1INBM2` into the inflation point and NB count.
fn parse_name(name: &str) -> Option<(Option<u32>, usize)> {
    if let Some(c) = name.strip_prefix("NBM") {
        return Some((None, c.parse().ok()?));
    }
    let (k, c) = name.split_once("INBM")?;
    Some((Some(k.parse().ok()?), c.parse().ok()?))
}

/// Inflation weight, NB weights, shapes α and mixing rates τ.
fn distribution_row(name: &str) -> Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let row = match name {
        "NBM1" => (0.0, vec![1.0], vec![5.717], vec![23.390]),
        "0INBM1" => (0.001, vec![0.999], vec![5.376], vec![22.256]),
        "1INBM1" => (0.136, vec![0.861], vec![0.217], vec![1.755]),
        "2INBM1" => (0.0, vec![1.0], vec![4.734], vec![19.408]),
        "3INBM1" => (0.001, vec![0.999], vec![7.730], vec![32.333]),
        "NBM2" => (0.0, vec![0.005, 0.995], vec![39.02, 32.53], vec![14.152, 141.857]),
        "0INBM2" => (0.001, vec![0.004, 0.995], vec![71.74, 30.31], vec![26.027, 124.000]),
        "1INBM2" => (0.116, vec![0.831, 0.053], vec![0.807, 2.305], vec![8.174, 2.690]),
        "2INBM2" => (0.0, vec![1.0, 0.0], vec![4.735, 6.327], vec![19.408, 30.250]),
        "3INBM2" => (0.001, vec![0.997, 0.002], vec![6.054, 8.88], vec![25.316, 42.478]),
        "NBM3" => (
            0.0,
            vec![0.014, 0.982, 0.004],
            vec![30.47, 29.48, 85.17],
            vec![124.000, 124.000, 30.250],
        ),
        "0INBM3" => (
            0.003,
            vec![0.007, 0.986, 0.004],
            vec![33.70, 32.58, 77.67],
            vec![141.857, 141.857, 27.571],
        ),
        "1INBM3" => (
            0.125,
            vec![0.644, 0.033, 0.198],
            vec![0.357, 2.628, 0.729],
            vec![4.587, 2.623, 4.181],
        ),
        _ => return None,
    };
    Some(row)
}

/// Distribution-form estimates as a k-inflated Poisson with a gamma-mixture
/// mean; the printed τ is the gamma rate.
pub fn published_distribution(name: &str) -> Result<InflatedGammaPrior> {
    let (k, _) = parse_name(name).ok_or_else(|| unknown(name))?;
    let (inflation, w, shapes, rates) = distribution_row(name).ok_or_else(|| unknown(name))?;
    let nb: f64 = w.iter().sum();
    let inflation = inflation / (inflation + nb);
    let mixing = MixGammaParams::with_rates(w.iter().map(|v| v / nb).collect(), shapes, rates)?;
    InflatedGammaPrior::new(k, inflation, mixing)
}

/// Inflation weight, NB weights, shapes and per-component coefficients on
/// `(1, gender, age, price, area)`.
#[allow(clippy::type_complexity)]
fn regression_row(name: &str) -> Option<(f64, Vec<f64>, Vec<f64>, Vec<[f64; 5]>)> {
    let row = match name {
        "NBM1" => (0.0, vec![1.0], vec![7.560], vec![[-0.738, 0.0, -0.118, -0.189, 0.0]]),
        "0INBM1" => (0.041, vec![0.959], vec![22.56], vec![[-0.698, 0.0, -0.118, -0.189, 0.0]]),
        "1INBM1" => (0.111, vec![0.889], vec![0.440], vec![[-0.887, 0.0, -0.213, -0.263, 0.0]]),
        "2INBM1" => (0.001, vec![0.999], vec![7.950], vec![[-0.744, 0.0, -0.121, -0.190, 0.0]]),
        "3INBM1" => (0.002, vec![0.998], vec![9.980], vec![[-0.745, 0.0, -0.114, -0.196, 0.0]]),
        "NBM2" => (
            0.0,
            vec![0.893, 0.107],
            vec![0.074, 22.01],
            vec![[0.0, 0.0, 0.0, 0.709, 0.0], [-0.766, 0.0, -0.116, 0.175, 0.0]],
        ),
        "0INBM2" => (
            0.047,
            vec![0.025, 0.928],
            vec![0.061, 18.71],
            vec![[0.0, 0.0, 0.0, 0.587, 0.0], [-0.719, 0.0, -0.117, 0.180, 0.0]],
        ),
        "1INBM2" => (
            0.120,
            vec![0.833, 0.047],
            vec![0.685, 9.471],
            vec![[1.009, -0.185, 0.0, 0.607, 0.0], [0.663, 0.0, -0.442, 0.076, 0.0]],
        ),
        "2INBM2" => (
            0.002,
            vec![0.024, 0.974],
            vec![0.087, 19.00],
            vec![[0.0, 0.0, 0.0, 0.618, 0.0], [-0.775, 0.0, -0.115, 0.177, 0.0]],
        ),
        "3INBM2" => (
            0.002,
            vec![0.022, 0.976],
            vec![0.090, 18.94],
            vec![[0.0, 0.0, 0.0, 0.675, 0.0], [-0.775, 0.0, -0.114, 0.179, 0.0]],
        ),
        "NBM3" => (
            0.0,
            vec![0.93, 0.02, 0.05],
            vec![31.22, 30.95, 0.030],
            vec![
                [-0.638, 0.0, 0.305, 0.0, 0.0],
                [1.032, 0.0, 0.337, 0.676, 0.0],
                [0.0, 0.0, 0.0, 0.332, 0.0],
            ],
        ),
        "0INBM3" => (
            0.03,
            vec![0.07, 0.46, 0.44],
            vec![13.29, 11.32, 0.157],
            vec![
                [0.531, 0.0, 0.0, 0.230, 0.0],
                [0.384, 0.0, 0.151, 0.151, 0.0],
                [0.165, 0.0, 0.165, 0.310, 0.0],
            ],
        ),
        "1INBM3" => (
            0.13,
            vec![0.07, 0.40, 0.40],
            vec![9.562, 0.643, 0.396],
            vec![
                [0.535, 0.770, 0.343, 0.0, 0.238],
                [2.514, 0.632, 0.548, 0.298, 2.382],
                [2.754, 0.0, 0.813, 1.545, 0.623],
            ],
        ),
        _ => return None,
    };
    Some(row)
}

/// Regression-form estimates on the full design row.
pub fn published_regression(name: &str) -> Result<KinbmRegParams> {
    let (k, _) = parse_name(name).ok_or_else(|| unknown(name))?;
    let (inflation, w, shapes, coef) = regression_row(name).ok_or_else(|| unknown(name))?;
    let mut weights = vec![if k.is_some() { inflation } else { 0.0 }];
    weights.extend(w);
    KinbmRegParams::from_weights(k, &weights, shapes, coef.into_iter().map(Vec::from).collect())
}

/// Pareto mixture estimates in distribution form, `m` = 1, 2 or 3.
pub fn published_pareto_distribution(m: usize) -> Result<ParetoMixParams> {
    match m {
        1 => ParetoMixParams::new(vec![1.0], vec![1.871], vec![16.44]),
        2 => ParetoMixParams::new(vec![0.519, 0.481], vec![1.871, 1.871], vec![16.43, 16.44]),
        3 => ParetoMixParams::new(
            vec![0.332, 0.321, 0.347],
            vec![1.871, 1.873, 1.873],
            vec![16.44, 16.43, 16.43],
        ),
        _ => Err(Error::InvalidParams(format!("no published Pareto mixture with {m} components"))),
    }
}

/// Pareto mixture regression estimates on the full design row. The
/// intercept is read as 6.15 for every `m`.
pub fn published_pareto_regression(m: usize) -> Result<ParetoRegParams> {
    let (weights, tails, price) = match m {
        1 => (vec![1.0], vec![1.927], 0.157),
        2 => (vec![0.542, 0.458], vec![1.927, 1.927], -0.16),
        3 => (vec![0.341, 0.312, 0.347], vec![1.93, 1.93, 1.93], -0.16),
        _ => {
            return Err(Error::InvalidParams(format!(
                "no published Pareto regression with {m} components"
            )))
        }
    };
    let coef = vec![vec![6.15, 0.0, 0.0, price, 0.0]; m];
    ParetoRegParams::new(weights, tails, coef)
}

/// A young man aged 25 with a car priced from 2×10⁴ to 5×10⁴ in a city of
/// at least 10⁶ people.
pub fn young_man_profile() -> Profile {
    Profile { gender: 1, age_class: 1, price_class: 2, area_class: 4 }
}

/// A woman aged 55 with a car under 2×10⁴ in a town under 10⁵ people.
pub fn mature_woman_profile() -> Profile {
    Profile { gender: 0, age_class: 4, price_class: 1, area_class: 1 }
}

/// Categories A1 (no covariates), A2 and A3.
pub fn pricing_categories() -> Vec<Category> {
    vec![
        Category { label: "A1".into(), row: None },
        Category { label: "A2".into(), row: Some(encode_design_row(&young_man_profile())) },
        Category { label: "A3".into(), row: Some(encode_design_row(&mature_woman_profile())) },
    ]
}

/// A pricing model from the published estimates: the distribution form
/// for A1 and the regression form otherwise, each paired with the
/// one-component Pareto severity model of the same form.
pub fn published_pricing_model(name: &str) -> Result<PricingModel> {
    let with = ModelSet::new(
        FrequencyModel::Regression(published_regression(name)?),
        Some(SeverityModel::Regression(published_pareto_regression(1)?)),
    );
    let without = ModelSet::new(
        FrequencyModel::Distribution(published_distribution(name)?),
        Some(SeverityModel::Distribution(published_pareto_distribution(1)?)),
    );
    Ok(PricingModel {
        name: name.to_string(),
        with_covariates: Some(with),
        without_covariates: Some(without),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_published_model_builds() {
        for name in FREQUENCY_MODELS {
            let d = published_distribution(name).unwrap();
            let r = published_regression(name).unwrap();
            assert_eq!(d.k(), r.k(), "{name}");
            assert_eq!(r.ncol(), 5);
            assert!(published_pricing_model(name).is_ok());
        }
        assert!(published_distribution("4INBM1").is_err());
        assert!(published_regression("Poisson").is_err());
        for m in 1..=3 {
            assert_eq!(published_pareto_distribution(m).unwrap().len(), m);
            assert_eq!(published_pareto_regression(m).unwrap().len(), m);
        }
    }

    #[test]
    fn distribution_means_match_the_portfolio() {
        // mean count p·k + q·Σ φ α/τ, close to 0.242 for the one-component fits
        for name in ["NBM1", "1INBM1"] {
            let d = published_distribution(name).unwrap();
            let m = d.mixing();
            let nb: f64 = (0..m.len()).map(|j| m.weights()[j] * m.shapes()[j] / m.rates()[j]).sum();
            let mean = d.inflation() * f64::from(d.k().unwrap_or(0)) + (1.0 - d.inflation()) * nb;
            assert!((mean - 0.242).abs() < 0.005, "{name}: {mean}");
        }
    }

    #[test]
    fn categories_are_coded() {
        let c = pricing_categories();
        assert_eq!(c[0].row, None);
        assert_eq!(c[1].row.as_deref(), Some(&[1.0, 1.0, 1.0, 2.0, 4.0][..]));
        assert_eq!(c[2].row.as_deref(), Some(&[1.0, 0.0, 4.0, 1.0, 1.0][..]));
    }
}
