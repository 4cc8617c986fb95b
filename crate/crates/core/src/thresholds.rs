//! Replication-stage cutoffs for methods B and C that keep the joint null
//! rejection rate of method A.

use serde::{Deserialize, Serialize};

use crate::design::{CovarianceSet, MethodId, StudyDesign};
use crate::error::{Error, Result};
use crate::mvn::{norm_quantile, norm_sf, orthant2, orthant3, CorrMatrix3, Orthant3Query};
use crate::root::{bracketed_root, RootOptions};

/// Two-sided p-value cutoffs for the discovery (`alpha`), replication
/// (`beta`) and combined (`gamma`) statistics. A cutoff of 1 leaves the
/// statistic unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// z-score cutoff for a two-sided p-value: -Φ⁻¹(p/2), or -∞ at p = 1.
pub fn z_of(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidThresholds(format!("got {p}")));
    }
    if p == 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-norm_quantile(0.5 * p)?)
}

/// Two-sided p-value of a z cutoff.
pub fn p_of(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        1.0
    } else {
        (2.0 * norm_sf(z).unwrap_or(f64::NAN)).min(1.0)
    }
}

impl Thresholds {
    pub const fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidThresholds(format!("{name} = {p}")));
            }
        }
        Ok(())
    }

    pub fn z_alpha(&self) -> Result<f64> {
        z_of(self.alpha)
    }

    pub fn z_beta(&self) -> Result<f64> {
        z_of(self.beta)
    }

    pub fn z_gamma(&self) -> Result<f64> {
        z_of(self.gamma)
    }

    /// Thresholds actually applied under `mode`.
    pub fn effective(&self, mode: Mode) -> Thresholds {
        match mode {
            Mode::General => *self,
            Mode::Gamma1 => Thresholds { gamma: 1.0, ..*self },
        }
    }
}

/// `General` applies all three cutoffs; `Gamma1` drops the combined one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    General,
    Gamma1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub residual: f64,
}

/// Solved cutoffs, tied to the design, thresholds and mode they were solved
/// for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedThresholds {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    pub mode: Mode,
    pub beta_star: f64,
    pub beta_perp: f64,
    pub z_beta_star: f64,
    pub z_beta_perp: f64,
    pub p0: f64,
    pub diagnostics_star: Diagnostics,
    pub diagnostics_perp: Diagnostics,
}

impl DerivedThresholds {
    /// Replication cutoff (as a z-score) used by `method`.
    pub fn z_mid(&self, method: MethodId) -> Result<f64> {
        match method {
            MethodId::A => self.thresholds.z_beta(),
            MethodId::B => Ok(self.z_beta_star),
            MethodId::C => Ok(self.z_beta_perp),
        }
    }

    pub fn matches(&self, design: &StudyDesign, t: &Thresholds) -> bool {
        self.design == *design && self.thresholds == *t
    }
}

/// Probability that all constrained statistics exceed their cutoffs in the
/// same direction: twice the upper orthant.
pub fn p_joint_z(corr: &CorrMatrix3, z: [f64; 3]) -> Result<f64> {
    Ok((2.0 * orthant3(&Orthant3Query { lower: z, corr: *corr })?).min(1.0))
}

/// Joint null rejection probability with `beta_override` in place of beta
/// when given.
pub fn p_joint(corr: &CorrMatrix3, t: &Thresholds, beta_override: Option<f64>) -> Result<f64> {
    t.validate()?;
    let mid = z_of(beta_override.unwrap_or(t.beta))?;
    p_joint_z(corr, [t.z_alpha()?, mid, t.z_gamma()?])
}

/// Find the replication cutoff z for `corr` at which the joint rejection
/// probability equals `p0`.
pub fn solve_mid_cutoff(corr: &CorrMatrix3, z_alpha: f64, z_beta: f64, z_gamma: f64, p0: f64) -> Result<(f64, Diagnostics)> {
    let f = |z: f64| p_joint_z(corr, [z_alpha, z, z_gamma]).map(|p| p - p0);
    let lo = z_beta;
    let f_lo = f(lo)?;
    let f_tol = (1e-12f64).min(1e-10 * p0);
    if f_lo.abs() <= f_tol {
        return Ok((lo, Diagnostics { iterations: 0, residual: f_lo }));
    }
    if f_lo < 0.0 {
        return Err(Error::SolverFailure(format!(
            "joint probability at z_beta already below target: residual {f_lo:e}"
        )));
    }
    let hi = z_beta + corr.rho_12().abs() * z_alpha.max(0.0) + 12.0;
    let mut failure = None;
    let root = bracketed_root(
        |z| match f(z) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        RootOptions { f_tol, ..RootOptions::default() },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let root = root?;
    Ok((root.x, Diagnostics { iterations: root.iterations, residual: root.residual }))
}

/// Solve beta* (method B) and beta-perp (method C) for a design.
pub fn solve_beta_star(design: &StudyDesign, cov: &CovarianceSet, t: &Thresholds, mode: Mode) -> Result<DerivedThresholds> {
    t.validate()?;
    design.validate_method_a()?;
    if t.beta >= 1.0 {
        return Err(Error::InvalidThresholds("beta must be below 1 to derive replication cutoffs".into()));
    }
    let (sa, sb, sc) = match (cov.sigma_a.as_ref(), cov.sigma_b.as_ref(), cov.sigma_c.as_ref()) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::InvalidDesign("correlation matrices undefined for this design".into())),
    };
    let te = t.effective(mode);
    let (za, zb, zg) = (te.z_alpha()?, te.z_beta()?, te.z_gamma()?);
    let p0 = p_joint_z(sa, [za, zb, zg])?;
    let (z_star, d_star) = solve_mid_cutoff(sb, za, zb, zg, p0)?;
    let (z_perp, d_perp) = solve_mid_cutoff(sc, za, zb, zg, p0)?;
    Ok(DerivedThresholds {
        design: *design,
        thresholds: *t,
        mode,
        beta_star: p_of(z_star),
        beta_perp: p_of(z_perp),
        z_beta_star: z_star,
        z_beta_perp: z_perp,
        p0,
        diagnostics_star: d_star,
        diagnostics_perp: d_perp,
    })
}

/// Large-z approximation of the method-B replication cutoff without a
/// combined cutoff: √(1-ρ²) z_β + ρ z_α.
pub fn beta_star_asymptotic(rho: f64, t: &Thresholds) -> Result<f64> {
    t.validate()?;
    Ok((1.0 - rho * rho).max(0.0).sqrt() * t.z_beta()? + rho * t.z_alpha()?)
}

/// Exact counterpart of [`beta_star_asymptotic`]: the cutoff z for a pair of
/// statistics with correlation `rho` matching the independent pair's rate.
pub fn beta_star_for_rho(rho: f64, t: &Thresholds) -> Result<(f64, Diagnostics)> {
    t.validate()?;
    let (za, zb) = (t.z_alpha()?, t.z_beta()?);
    let p0 = 2.0 * orthant2(za, zb, 0.0)?;
    let corr = CorrMatrix3::new(rho, 0.0, 0.0)?;
    solve_mid_cutoff(&corr, za, zb, f64::NEG_INFINITY, p0)
}
