//! Correlation of two stratified (meta-analysed) statistics that share
//! samples within strata.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stratum: cohort sizes for studies i and j and how many of those
/// samples the two studies have in common.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stratum {
    pub n0_i: u64,
    pub n1_i: u64,
    pub n0_j: u64,
    pub n1_j: u64,
    pub n0_shared: u64,
    pub n1_shared: u64,
}

impl Stratum {
    fn informative_i(&self) -> bool {
        self.n0_i > 0 && self.n1_i > 0
    }

    fn informative_j(&self) -> bool {
        self.n0_j > 0 && self.n1_j > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedDesign {
    pub strata: Vec<Stratum>,
}

/// Per-stratum weights of the combined statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StratumWeights {
    /// Cochran–Mantel–Haenszel: weight n0 n1 / (n0 + n1).
    #[default]
    Cmh,
}

impl StratumWeights {
    fn weight(self, n0: u64, n1: u64) -> f64 {
        match self {
            StratumWeights::Cmh => {
                let (a, b) = (n0 as f64, n1 as f64);
                a * b / (a + b)
            }
        }
    }
}

/// Null correlation between the weighted stratified statistics of studies
/// i and j, for an allele frequency common to all strata. Strata
/// uninformative for a study contribute nothing to it.
pub fn covariance_stratified(design: &StratifiedDesign, weights: StratumWeights) -> Result<f64> {
    for (k, s) in design.strata.iter().enumerate() {
        if s.n0_shared > s.n0_i.min(s.n0_j) || s.n1_shared > s.n1_i.min(s.n1_j) {
            return Err(Error::InvalidDesign(format!(
                "stratum {k}: shared count exceeds a study's cohort"
            )));
        }
    }
    let mut cov = 0.0;
    let mut var_i = 0.0;
    let mut var_j = 0.0;
    for s in &design.strata {
        let (n0i, n1i, n0j, n1j) = (s.n0_i as f64, s.n1_i as f64, s.n0_j as f64, s.n1_j as f64);
        let wi = s.informative_i().then(|| weights.weight(s.n0_i, s.n1_i));
        let wj = s.informative_j().then(|| weights.weight(s.n0_j, s.n1_j));
        if let Some(w) = wi {
            var_i += w * w * (1.0 / n0i + 1.0 / n1i);
        }
        if let Some(w) = wj {
            var_j += w * w * (1.0 / n0j + 1.0 / n1j);
        }
        if let (Some(a), Some(b)) = (wi, wj) {
            cov += a * b * (s.n0_shared as f64 / (n0i * n0j) + s.n1_shared as f64 / (n1i * n1j));
        }
    }
    if var_i == 0.0 || var_j == 0.0 {
        return Err(Error::NoInformativeStrata);
    }
    Ok((cov / (var_i * var_j).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_studies_are_perfectly_correlated() {
        let s = Stratum { n0_i: 50, n1_i: 30, n0_j: 50, n1_j: 30, n0_shared: 50, n1_shared: 30 };
        let d = StratifiedDesign { strata: vec![s, Stratum { n0_i: 10, n1_i: 90, n0_j: 10, n1_j: 90, n0_shared: 10, n1_shared: 90 }] };
        assert!((covariance_stratified(&d, StratumWeights::Cmh).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn no_informative_strata() {
        let s = Stratum { n0_i: 0, n1_i: 30, n0_j: 50, n1_j: 30, n0_shared: 0, n1_shared: 30 };
        let d = StratifiedDesign { strata: vec![s] };
        assert_eq!(covariance_stratified(&d, StratumWeights::Cmh), Err(Error::NoInformativeStrata));
    }

    #[test]
    fn shared_beyond_cohort_is_rejected() {
        let s = Stratum { n0_i: 10, n1_i: 30, n0_j: 50, n1_j: 30, n0_shared: 11, n1_shared: 0 };
        assert!(covariance_stratified(&StratifiedDesign { strata: vec![s] }, StratumWeights::Cmh).is_err());
    }
}
