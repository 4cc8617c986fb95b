use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hit_triple;
use crate::design::{aberrant_scenario, covariance, zeta, Cohort, EffectScenario, Statistic, StudyDesign};
use crate::error::{Error, Result};
use crate::root::{bracketed_root, RootOptions};
use crate::thresholds::{DerivedThresholds, Thresholds};

/// Frequencies taken by one aberrant cohort along the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AberrantCohort {
    pub cohort: Cohort,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPoint {
    pub zeta_driver: f64,
    pub r_a: f64,
    pub r_b: f64,
    pub r_c: f64,
}

/// Rates for (A, B, C) as the driving z-score goes to 0 and to ±∞. The
/// infinite limit is only given for single-cohort aberrance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileLimits {
    pub zero: [f64; 3],
    pub infinite: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfile {
    pub base_maf: f64,
    pub aberrant_cohorts: Vec<Cohort>,
    /// Statistic whose expected z-score is reported as the driver.
    pub driver: Statistic,
    pub grid: Vec<ErrorPoint>,
    pub limits: ProfileLimits,
}

/// Discovery-side aberrance is driven by z_d, replication-side by z_r.
fn driver_for(cohorts: &[Cohort]) -> Statistic {
    if cohorts.iter().any(|c| matches!(c, Cohort::C0 | Cohort::C1)) {
        Statistic::D
    } else {
        Statistic::R
    }
}

fn limits(dt: &DerivedThresholds, cohorts: &[Cohort]) -> ProfileLimits {
    let t = dt.thresholds.effective(dt.mode);
    let (ha, hb) = (0.5 * t.alpha, 0.5 * t.beta);
    let infinite = match cohorts {
        [Cohort::C1] => Some([hb, 0.5 * dt.beta_star, 0.5 * dt.beta_perp]),
        [Cohort::C1p] => Some([ha, ha, ha]),
        [Cohort::C0p] => Some([ha, ha, 1.0]),
        [Cohort::C0] => Some([hb, 1.0, 1.0]),
        _ => None,
    };
    ProfileLimits { zero: [dt.p0; 3], infinite }
}

/// Type-1 error rates of the three methods when the listed cohorts deviate
/// from a common null frequency `base_maf`. Grid point `i` sets every listed
/// cohort to its `i`-th frequency.
pub fn error_profile(dt: &DerivedThresholds, base_maf: f64, aberrant: &[AberrantCohort]) -> Result<ErrorProfile> {
    if aberrant.is_empty() {
        return Err(Error::InvalidArgument("at least one aberrant cohort is required".into()));
    }
    let n = aberrant[0].mu.len();
    if n == 0 || aberrant.iter().any(|a| a.mu.len() != n) {
        return Err(Error::InvalidArgument("aberrant frequency grids must be non-empty and of equal length".into()));
    }
    let mut cohorts: Vec<Cohort> = aberrant.iter().map(|a| a.cohort).collect();
    cohorts.sort();
    if cohorts.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("each cohort may be listed once".into()));
    }
    let base = EffectScenario::null(base_maf);
    base.validate()?;
    let cov = covariance(&dt.design)?;
    let driver = driver_for(&cohorts);
    let grid = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = aberrant.iter().fold(base, |s, a| aberrant_scenario(&s, a.cohort, a.mu[i]));
            let z = zeta(&dt.design, &s)?;
            let [r_a, r_b, r_c] = hit_triple(&cov, &z, dt)?;
            let zeta_driver = z.get(driver).ok_or_else(|| Error::InvalidDesign("driver statistic undefined".into()))?;
            Ok(ErrorPoint { zeta_driver, r_a, r_b, r_c })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorProfile { base_maf, aberrant_cohorts: cohorts.clone(), driver, grid, limits: limits(dt, &cohorts) })
}

/// Frequency of `cohort` at which its driving z-score equals `target`.
pub fn mu_for_driver(design: &StudyDesign, base_maf: f64, cohort: Cohort, target: f64) -> Result<f64> {
    let base = EffectScenario::null(base_maf);
    base.validate()?;
    let stat = driver_for(&[cohort]);
    let f = |mu: f64| -> f64 {
        zeta(design, &aberrant_scenario(&base, cohort, mu))
            .ok()
            .and_then(|z| z.get(stat))
            .map_or(f64::NAN, |z| z - target)
    };
    let eps = 1e-12;
    let (lo, hi) = (eps, 1.0 - eps);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return Err(Error::InvalidArgument(format!(
            "driver z-score {target} unreachable by shifting {}",
            cohort.name()
        )));
    }
    Ok(bracketed_root(f, lo, hi, RootOptions { x_tol: 1e-15, ..RootOptions::default() })?.x)
}

/// Frequencies of `cohort` giving a uniform grid of driver z-scores on
/// [-zeta_max, zeta_max].
pub fn driver_grid(design: &StudyDesign, base_maf: f64, cohort: Cohort, zeta_max: f64, n: usize) -> Result<AberrantCohort> {
    if n < 2 || !(zeta_max.is_finite() && zeta_max > 0.0) {
        return Err(Error::InvalidArgument("driver grid needs n >= 2 and a positive finite zeta_max".into()));
    }
    let mu = (0..n)
        .map(|i| {
            let z = -zeta_max + 2.0 * zeta_max * i as f64 / (n - 1) as f64;
            if z == 0.0 {
                Ok(base_maf)
            } else {
                mu_for_driver(design, base_maf, cohort, z)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AberrantCohort { cohort, mu })
}

/// Closed-form approximations for aberrance in the replication cases,
/// accurate for small thresholds without a combined cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AberranceBounds {
    pub k: f64,
    pub k1: f64,
    pub rho: f64,
    /// Approximate maximum of R_B - R_A under C1' aberrance.
    pub max_rb_minus_ra: f64,
    /// Ratio of the FPR decrease under C0' aberrance to the increase under
    /// C1' aberrance. Undefined without shared controls.
    pub integral_ratio: Option<f64>,
}

pub fn aberrance_bounds(design: &StudyDesign, t: &Thresholds) -> Result<AberranceBounds> {
    design.validate()?;
    t.validate()?;
    if design.n0p == 0 {
        return Err(Error::InvalidDesign("aberrance bounds need n0p > 0".into()));
    }
    let (n0, n0p, n1p) = (design.n0 as f64, design.n0p as f64, design.n1p as f64);
    let k = ((n0 + n0p) * (n0p + n1p) / (n0p * (n0 + n0p + n1p))).sqrt();
    let k1 = (n0p * (n0p + n1p) / ((n0 + n0p) * (n0 + n0p + n1p))).sqrt();
    let rho = if design.n0 == 0 { 0.0 } else { covariance(design)?.rho(Statistic::D, Statistic::S).unwrap_or(0.0) };
    let s = (1.0 - rho * rho).sqrt();
    let max_rb_minus_ra = t.alpha / (2.0 * (2.0 * std::f64::consts::PI).sqrt()) * (k / s - 1.0) * t.z_beta()?;
    let denom = s / k - 1.0;
    let integral_ratio = (design.n0 > 0 && denom != 0.0).then(|| (1.0 - s / k1) / denom);
    Ok(AberranceBounds { k, k1, rho, max_rb_minus_ra, integral_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{solve_beta_star, Mode};

    #[test]
    fn no_shared_controls_means_no_excess() {
        let b = aberrance_bounds(&StudyDesign::new(0, 3000, 4000, 2000), &Thresholds::new(5e-6, 5e-4, 1.0)).unwrap();
        assert!((b.k - 1.0).abs() < 1e-15);
        assert_eq!(b.rho, 0.0);
        assert!(b.max_rb_minus_ra.abs() < 1e-20);
        assert!(b.integral_ratio.is_none());
    }

    #[test]
    fn missing_replication_controls() {
        assert!(aberrance_bounds(&StudyDesign::new(10, 10, 0, 10), &Thresholds::new(0.1, 0.1, 1.0)).is_err());
    }

    #[test]
    fn driver_grid_hits_targets() {
        let d = StudyDesign::new(15000, 5000, 5000, 5000);
        let g = driver_grid(&d, 0.1, Cohort::C1p, 6.0, 5).unwrap();
        for (i, &mu) in g.mu.iter().enumerate() {
            let z = zeta(&d, &aberrant_scenario(&EffectScenario::null(0.1), Cohort::C1p, mu)).unwrap();
            assert!((z.zeta_r.unwrap() - (-6.0 + 3.0 * i as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_shift_gives_p0() {
        let d = StudyDesign::new(8000, 3000, 3000, 3000);
        let t = Thresholds::new(1e-4, 1e-2, 1e-6);
        let dt = solve_beta_star(&d, &covariance(&d).unwrap(), &t, Mode::General).unwrap();
        let p = error_profile(&dt, 0.2, &[AberrantCohort { cohort: Cohort::C0, mu: vec![0.2] }]).unwrap();
        let pt = p.grid[0];
        for r in [pt.r_a, pt.r_b, pt.r_c] {
            assert!((r / dt.p0 - 1.0).abs() < 1e-9);
        }
        assert_eq!(p.limits.infinite, Some([5e-3, 1.0, 1.0]));
    }
}
