//! Bayes premiums for a policyholder's claim history.
//!
//! The rate premium is the posterior mean of the claim frequency risk
//! parameter, reported relative to a new policyholder so that a history of
//! length zero has rate 1. The base premium is the posterior mean of the
//! exponential severity scale. Their product is the pure premium.

mod base;
mod rate;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use base::{base_premium_dist, base_premium_reg};
pub use rate::{
    posterior_rate_dist, posterior_rate_reg, rate_premium_closed_q1, rate_premium_dist,
    rate_premium_reg,
};
pub use table::{
    cumulated_scenarios, per_year_scenarios, premium_table, quote, Category, ColumnHeader,
    FrequencyModel, ModelSet, PremiumRow, PremiumTable, PricingModel, Scenario, SeverityModel,
    TableKind,
};

/// Claim counts per past year and, optionally, the claim sizes behind them.
///
/// `severities` is either empty (sizes not recorded) or holds one list per
/// year whose length equals that year's count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHistory")]
pub struct ClaimHistory {
    counts: Vec<u64>,
    severities: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawHistory {
    counts: Vec<u64>,
    #[serde(default)]
    severities: Vec<Vec<f64>>,
}

impl TryFrom<RawHistory> for ClaimHistory {
    type Error = Error;
    fn try_from(raw: RawHistory) -> Result<Self> {
        ClaimHistory::new(raw.counts, raw.severities)
    }
}

impl ClaimHistory {
    pub fn new(counts: Vec<u64>, severities: Vec<Vec<f64>>) -> Result<Self> {
        if !severities.is_empty() {
            if severities.len() != counts.len() {
                return Err(Error::DimensionMismatch {
                    expected: counts.len(),
                    got: severities.len(),
                });
            }
            for (year, (k, z)) in counts.iter().zip(&severities).enumerate() {
                if z.len() as u64 != *k {
                    return Err(Error::InvalidParams(format!(
                        "year {} reports {k} claims but {} severities",
                        year + 1,
                        z.len()
                    )));
                }
                if let Some(v) = z.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::Domain(format!("claim sizes must be positive, got {v}")));
                }
            }
        }
        Ok(ClaimHistory { counts, severities })
    }

    /// A history without claim sizes.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        ClaimHistory { counts, severities: Vec::new() }
    }

    /// A new policyholder.
    pub fn empty() -> Self {
        ClaimHistory { counts: Vec::new(), severities: Vec::new() }
    }

    pub fn years(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn severities(&self) -> &[Vec<f64>] {
        &self.severities
    }

    /// Total number of claims `K`.
    pub fn total_claims(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Whether claim sizes are available for every reported claim.
    pub fn has_severities(&self) -> bool {
        self.total_claims() == 0 || !self.severities.is_empty()
    }

    /// Sum of all claim sizes.
    pub fn total_severity(&self) -> f64 {
        self.severities.iter().flatten().sum()
    }

    /// The history with its years in the given order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.years()];
        for &i in order {
            if i >= self.years() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParams("year order must be a permutation".into()));
            }
        }
        if order.len() != self.years() {
            return Err(Error::DimensionMismatch { expected: self.years(), got: order.len() });
        }
        let counts = order.iter().map(|&i| self.counts[i]).collect();
        let severities = if self.severities.is_empty() {
            Vec::new()
        } else {
            order.iter().map(|&i| self.severities[i].clone()).collect()
        };
        Ok(ClaimHistory { counts, severities })
    }
}

/// How a premium factor was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// Rate, base and pure premium for one policyholder-year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumQuote {
    /// Unitless multiplier; 1 for a new policyholder.
    pub rate: f64,
    /// Expected claim size in currency units.
    pub base: f64,
    /// `rate × base`.
    pub pure: f64,
    pub rate_method: Option<Method>,
    pub base_method: Option<Method>,
}

impl PremiumQuote {
    pub fn tagged(
        rate: f64,
        rate_method: Method,
        base: f64,
        base_method: Method,
    ) -> Result<PremiumQuote> {
        let mut q = pure_premium(rate, base)?;
        q.rate_method = Some(rate_method);
        q.base_method = Some(base_method);
        Ok(q)
    }
}

/// Combines a rate premium and a base premium.
pub fn pure_premium(rate: f64, base: f64) -> Result<PremiumQuote> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Domain(format!("rate premium must be positive, got {rate}")));
    }
    if !(base.is_finite() && base > 0.0) {
        return Err(Error::Domain(format!("base premium must be positive, got {base}")));
    }
    Ok(PremiumQuote { rate, base, pure: rate * base, rate_method: None, base_method: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_validation() {
        assert!(ClaimHistory::new(vec![1, 0], vec![vec![10.0], vec![]]).is_ok());
        assert!(ClaimHistory::new(vec![2, 0], vec![vec![10.0], vec![]]).is_err());
        assert!(ClaimHistory::new(vec![1], vec![vec![-1.0]]).is_err());
        assert!(ClaimHistory::new(vec![1, 0], vec![vec![1.0]]).is_err());
        let h = ClaimHistory::from_counts(vec![2, 1]);
        assert_eq!(h.total_claims(), 3);
        assert!(!h.has_severities());
        assert!(ClaimHistory::from_counts(vec![0, 0]).has_severities());
        let p = h.permuted(&[1, 0]).unwrap();
        assert_eq!(p.counts(), &[1, 2]);
        assert!(h.permuted(&[0, 0]).is_err());
    }

    #[test]
    fn pure_is_product() {
        assert_eq!(pure_premium(1.0, 613.739).unwrap().pure, 613.739);
        assert_eq!(pure_premium(2.0, 100.0).unwrap().pure, 200.0);
        assert!(pure_premium(0.0, 1.0).is_err());
        assert!(pure_premium(1.0, f64::NAN).is_err());
    }
}
