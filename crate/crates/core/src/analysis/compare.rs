use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hit_probability_zeta, MethodId};
use crate::design::{covariance, scenario_from_or_maf, zeta, StudyDesign};
use crate::error::{Error, Result};
use crate::thresholds::{solve_beta_star, Mode, Thresholds};

/// A fixed discovery study plus `new_samples` replication samples to be split
/// between controls and cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub n0: u64,
    pub n1: u64,
    pub new_samples: u64,
    pub n0p_min: u64,
    pub n0p_max: u64,
    pub n0p_step: u64,
    pub maf: f64,
    pub odds_ratios: Vec<f64>,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub kappa1: f64,
    #[serde(default)]
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub n0p: u64,
    pub n1p: u64,
    pub power_a: Vec<f64>,
    pub power_b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareBest {
    pub odds_ratio: f64,
    pub best_a_n0p: u64,
    pub best_a_power: f64,
    pub best_b_n0p: u64,
    pub best_b_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub odds_ratios: Vec<f64>,
    pub rows: Vec<CompareRow>,
    pub best: Vec<CompareBest>,
}

/// Power of methods A and B for every replication split on the grid, and
/// the best split for each odds ratio.
pub fn compare(spec: &CompareSpec, t: &Thresholds) -> Result<CompareResult> {
    if spec.odds_ratios.is_empty() {
        return Err(Error::InvalidArgument("at least one odds ratio is required".into()));
    }
    if spec.n0p_step == 0 || spec.n0p_min > spec.n0p_max || spec.n0p_max >= spec.new_samples || spec.n0p_min == 0 {
        return Err(Error::InvalidArgument(format!(
            "split grid must satisfy 0 < n0p_min <= n0p_max < new_samples ({}) with a positive step",
            spec.new_samples
        )));
    }
    let splits: Vec<u64> = (spec.n0p_min..=spec.n0p_max).step_by(spec.n0p_step as usize).collect();
    let rows = splits
        .par_iter()
        .map(|&n0p| {
            let d = StudyDesign::new(spec.n0, spec.n1, n0p, spec.new_samples - n0p);
            let cov = covariance(&d)?;
            let dt = solve_beta_star(&d, &cov, t, spec.mode)?;
            let mut power_a = Vec::with_capacity(spec.odds_ratios.len());
            let mut power_b = Vec::with_capacity(spec.odds_ratios.len());
            for &or in &spec.odds_ratios {
                let z = zeta(&d, &scenario_from_or_maf(or, spec.maf, spec.kappa0, spec.kappa1)?)?;
                power_a.push(hit_probability_zeta(MethodId::A, &cov, &z, &dt)?);
                power_b.push(hit_probability_zeta(MethodId::B, &cov, &z, &dt)?);
            }
            Ok(CompareRow { n0p, n1p: d.n1p, power_a, power_b })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = spec
        .odds_ratios
        .iter()
        .enumerate()
        .map(|(k, &odds_ratio)| {
            let arg = |f: &dyn Fn(&CompareRow) -> f64| {
                rows.iter().fold((0, f64::NEG_INFINITY), |acc, r| if f(r) > acc.1 { (r.n0p, f(r)) } else { acc })
            };
            let (best_a_n0p, best_a_power) = arg(&|r| r.power_a[k]);
            let (best_b_n0p, best_b_power) = arg(&|r| r.power_b[k]);
            CompareBest { odds_ratio, best_a_n0p, best_a_power, best_b_n0p, best_b_power }
        })
        .collect();
    Ok(CompareResult { odds_ratios: spec.odds_ratios.clone(), rows, best })
}
