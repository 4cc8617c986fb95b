//! Hit probabilities for the three methods and the grids built on them.

mod compare;
mod power;
mod profile;

pub use compare::{compare, CompareBest, CompareResult, CompareRow, CompareSpec};
pub use power::{power_at, power_curve, power_summary, summarize, PowerCurve, PowerPoint, PowerSpec, PowerSummary};
pub use profile::{
    aberrance_bounds, driver_grid, error_profile, mu_for_driver, AberranceBounds, AberrantCohort, ErrorPoint,
    ErrorProfile, ProfileLimits,
};

pub use crate::design::MethodId;

use serde::{Deserialize, Serialize};

use crate::design::{
    covariance, scenario_moments, zeta, CovarianceSet, EffectScenario, StudyDesign, ZetaVector,
};
use crate::mvn::CorrMatrix3;
use crate::error::{Error, Result};
use crate::mvn::{orthant3, Orthant3Query};
use crate::thresholds::{DerivedThresholds, Thresholds};

/// Probability that `method` declares a hit given expected z-scores: the
/// statistics must all pass their cutoffs with a common sign.
pub fn hit_probability_zeta(
    method: MethodId,
    cov: &CovarianceSet,
    zeta: &ZetaVector,
    dt: &DerivedThresholds,
) -> Result<f64> {
    let corr = cov
        .sigma(method)
        .ok_or_else(|| Error::InvalidDesign(format!("method {method:?} undefined for this design")))?;
    let t = dt.thresholds.effective(dt.mode);
    let z = [t.z_alpha()?, dt.z_mid(method)?, t.z_gamma()?];
    let mut shift = [0.0; 3];
    for (k, stat) in method.triple().iter().enumerate() {
        shift[k] = zeta
            .get(*stat)
            .ok_or_else(|| Error::InvalidDesign(format!("statistic {} undefined", stat.name())))?;
    }
    let up = orthant3(&Orthant3Query { lower: [z[0] - shift[0], z[1] - shift[1], z[2] - shift[2]], corr: *corr })?;
    let down = orthant3(&Orthant3Query { lower: [z[0] + shift[0], z[1] + shift[1], z[2] + shift[2]], corr: *corr })?;
    Ok((up + down).min(1.0))
}

/// Power (or type-1 error, under a null-like scenario) of `method`.
pub fn hit_probability(
    method: MethodId,
    design: &StudyDesign,
    scenario: &EffectScenario,
    t: &Thresholds,
    dt: &DerivedThresholds,
) -> Result<f64> {
    if !dt.matches(design, t) {
        return Err(Error::ThresholdsNotDerived);
    }
    let cov = covariance(design)?;
    let z = zeta(design, scenario)?;
    hit_probability_zeta(method, &cov, &z, dt)
}

/// Distribution assumed for the z-scores around their expected values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceModel {
    /// Unit variances and the null correlations.
    #[default]
    Null,
    /// Variances and correlations evaluated at the scenario's frequencies.
    Alternative,
}

/// [`hit_probability`] under a chosen [`VarianceModel`].
pub fn hit_probability_with(
    method: MethodId,
    design: &StudyDesign,
    scenario: &EffectScenario,
    t: &Thresholds,
    dt: &DerivedThresholds,
    model: VarianceModel,
) -> Result<f64> {
    if model == VarianceModel::Null {
        return hit_probability(method, design, scenario, t, dt);
    }
    if !dt.matches(design, t) {
        return Err(Error::ThresholdsNotDerived);
    }
    let z = zeta(design, scenario)?;
    let mom = scenario_moments(design, scenario)?;
    let te = dt.thresholds.effective(dt.mode);
    let cut = [te.z_alpha()?, dt.z_mid(method)?, te.z_gamma()?];
    let [a, b, c] = method.triple();
    let undefined = || Error::InvalidDesign(format!("method {method:?} undefined for this design"));
    let corr = CorrMatrix3::new(
        mom.rho(a, b).ok_or_else(undefined)?,
        mom.rho(a, c).ok_or_else(undefined)?,
        mom.rho(b, c).ok_or_else(undefined)?,
    )?;
    let mut lower_up = [0.0; 3];
    let mut lower_down = [0.0; 3];
    for (k, stat) in [a, b, c].into_iter().enumerate() {
        let (mean, sd) = (z.get(stat).ok_or_else(undefined)?, mom.sd(stat).ok_or_else(undefined)?);
        lower_up[k] = (cut[k] - mean) / sd;
        lower_down[k] = (cut[k] + mean) / sd;
    }
    let up = orthant3(&Orthant3Query { lower: lower_up, corr })?;
    let down = orthant3(&Orthant3Query { lower: lower_down, corr })?;
    Ok((up + down).min(1.0))
}

/// All three methods at once.
pub(crate) fn hit_triple(cov: &CovarianceSet, z: &ZetaVector, dt: &DerivedThresholds) -> Result<[f64; 3]> {
    Ok([
        hit_probability_zeta(MethodId::A, cov, z, dt)?,
        hit_probability_zeta(MethodId::B, cov, z, dt)?,
        hit_probability_zeta(MethodId::C, cov, z, dt)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thresholds::{solve_beta_star, Mode};

    fn demo() -> (StudyDesign, Thresholds, DerivedThresholds) {
        let d = StudyDesign::new(15000, 5000, 5000, 5000);
        let t = Thresholds::new(5e-6, 5e-4, 5e-8);
        let dt = solve_beta_star(&d, &covariance(&d).unwrap(), &t, Mode::General).unwrap();
        (d, t, dt)
    }

    #[test]
    fn null_hit_rate_is_p0_for_every_method() {
        let (d, t, dt) = demo();
        for m in MethodId::ALL {
            let p = hit_probability(m, &d, &EffectScenario::null(0.2), &t, &dt).unwrap();
            assert!((p - dt.p0).abs() < 1e-10 * dt.p0.max(1e-300) + 1e-18, "{m:?}: {p} vs {}", dt.p0);
        }
    }

    #[test]
    fn saturating_effect_gives_certain_hit() {
        let (d, t, dt) = demo();
        let s = EffectScenario { mu0: 0.1, mu1: 0.5, mu0p: 0.1, mu1p: 0.5 };
        for m in MethodId::ALL {
            assert!(hit_probability(m, &d, &s, &t, &dt).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn mismatched_thresholds_are_rejected() {
        let (d, _, dt) = demo();
        let other = Thresholds::new(1e-5, 5e-4, 5e-8);
        let e = hit_probability(MethodId::B, &d, &EffectScenario::null(0.2), &other, &dt).unwrap_err();
        assert_eq!(e, Error::ThresholdsNotDerived);
    }
}
