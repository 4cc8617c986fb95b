use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hit_triple, MethodId};
use crate::design::{covariance, scenario_from_or_maf, zeta, CovarianceSet, StudyDesign};
use crate::error::{Error, Result};
use crate::thresholds::{DerivedThresholds, Thresholds};

/// Effect grid for a power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSpec {
    pub maf: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub kappa1: f64,
    pub log_or_min: f64,
    pub log_or_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub log_or: f64,
    pub power_a: f64,
    pub power_b: f64,
    pub power_c: f64,
}

impl PowerPoint {
    pub fn power(&self, m: MethodId) -> f64 {
        match m {
            MethodId::A => self.power_a,
            MethodId::B => self.power_b,
            MethodId::C => self.power_c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    pub maf: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub grid: Vec<PowerPoint>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn evaluate(cov: &CovarianceSet, dt: &DerivedThresholds, maf: f64, kappa: (f64, f64), log_ors: &[f64]) -> Result<Vec<PowerPoint>> {
    log_ors
        .par_iter()
        .map(|&x| {
            let s = scenario_from_or_maf(x.exp(), maf, kappa.0, kappa.1)?;
            let z = zeta(&dt.design, &s)?;
            let [a, b, c] = hit_triple(cov, &z, dt)?;
            Ok(PowerPoint { log_or: x, power_a: a, power_b: b, power_c: c })
        })
        .collect()
}

fn check(spec: &PowerSpec) -> Result<()> {
    if spec.n_points < 3 {
        return Err(Error::InvalidArgument(format!("n_points must be at least 3, got {}", spec.n_points)));
    }
    if !(spec.log_or_min.is_finite() && spec.log_or_max.is_finite() && spec.log_or_min < spec.log_or_max) {
        return Err(Error::InvalidArgument(format!(
            "log-OR range must be finite and increasing, got [{}, {}]",
            spec.log_or_min, spec.log_or_max
        )));
    }
    Ok(())
}

/// Power of each method on a uniform log-odds-ratio grid.
pub fn power_curve(dt: &DerivedThresholds, spec: &PowerSpec) -> Result<PowerCurve> {
    check(spec)?;
    power_at(dt, spec.maf, spec.kappa0, spec.kappa1, &linspace(spec.log_or_min, spec.log_or_max, spec.n_points))
}

/// Power of each method at arbitrary log odds ratios, in the given order.
pub fn power_at(dt: &DerivedThresholds, maf: f64, kappa0: f64, kappa1: f64, log_ors: &[f64]) -> Result<PowerCurve> {
    if log_ors.is_empty() || log_ors.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("log odds ratios must be finite and non-empty".into()));
    }
    let cov = covariance(&dt.design)?;
    let grid = evaluate(&cov, dt, maf, (kappa0, kappa1), log_ors)?;
    Ok(PowerCurve { design: dt.design, thresholds: dt.thresholds, maf, kappa0, kappa1, grid })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    /// Integral of the power difference over log-odds ratio.
    pub mean_diff: f64,
    pub max_diff: f64,
    pub log_or_min: f64,
    pub log_or_max: f64,
}

/// Trapezoid integral and grid maximum of `second - first` on an existing
/// curve.
pub fn summarize(curve: &PowerCurve, pair: (MethodId, MethodId)) -> PowerSummary {
    let diff: Vec<f64> = curve.grid.iter().map(|p| p.power(pair.1) - p.power(pair.0)).collect();
    let mut integral = 0.0;
    for k in 1..curve.grid.len() {
        integral += 0.5 * (diff[k] + diff[k - 1]) * (curve.grid[k].log_or - curve.grid[k - 1].log_or);
    }
    PowerSummary {
        mean_diff: integral,
        max_diff: diff.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        log_or_min: curve.grid.first().map_or(0.0, |p| p.log_or),
        log_or_max: curve.grid.last().map_or(0.0, |p| p.log_or),
    }
}

const GAP_NEGLIGIBLE: f64 = 1e-6;
const LOG_OR_LIMIT: f64 = 5.0;

/// Like [`summarize`], but widens the range by doubling (at the same grid
/// spacing, up to |log OR| = 5) until the power difference is negligible at
/// both ends.
pub fn power_summary(dt: &DerivedThresholds, spec: &PowerSpec, pair: (MethodId, MethodId)) -> Result<PowerSummary> {
    check(spec)?;
    let step = (spec.log_or_max - spec.log_or_min) / (spec.n_points - 1) as f64;
    let (mut lo, mut hi) = (spec.log_or_min, spec.log_or_max);
    loop {
        let n = ((hi - lo) / step).round() as usize + 1;
        let curve = power_curve(dt, &PowerSpec { log_or_min: lo, log_or_max: hi, n_points: n.max(3), ..*spec })?;
        let first = curve.grid.first().unwrap();
        let last = curve.grid.last().unwrap();
        let gap = |p: &PowerPoint| (p.power(pair.1) - p.power(pair.0)).abs();
        let lo_open = gap(first) >= GAP_NEGLIGIBLE && lo > -LOG_OR_LIMIT;
        let hi_open = gap(last) >= GAP_NEGLIGIBLE && hi < LOG_OR_LIMIT;
        if !lo_open && !hi_open {
            return Ok(summarize(&curve, pair));
        }
        let width = hi - lo;
        if lo_open {
            lo = (lo - width).max(-LOG_OR_LIMIT);
        }
        if hi_open {
            hi = (hi + width).min(LOG_OR_LIMIT);
        }
    }
}
