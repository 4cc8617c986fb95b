//! Request and response types shared by the command-line and HTTP front
//! ends, and the executors behind them. Both front ends deserialize the same
//! request, call the same executor and serialize with [`format`], so their
//! outputs agree byte for byte.

pub mod format;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    aberrance_bounds, compare, driver_grid, error_profile, hit_probability_with, power_at, power_curve, summarize,
    AberranceBounds, AberrantCohort, CompareResult, CompareSpec, ErrorProfile, MethodId, PowerCurve, PowerSpec,
    PowerSummary, VarianceModel,
};
use crate::design::{covariance, scenario_from_or_maf, Cohort, EffectScenario, StudyDesign};
use crate::error::{Error, Result};
use crate::mc::{binomial_se, simulate, MCConfig, MCResult};
use crate::thresholds::{solve_beta_star, DerivedThresholds, Mode, Thresholds};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Below this many replicates an MC validation carries a warning.
pub const LOW_REPLICATES: u64 = 10_000;
pub const LOW_REPLICATES_WARNING: &str = "low replicate count";

pub const DEFAULT_LOG_OR_MIN: f64 = 0.0;
pub const DEFAULT_LOG_OR_MAX: f64 = 0.5;
pub const DEFAULT_GRID_POINTS: usize = 51;
pub const DEFAULT_ZETA_MAX: f64 = 8.0;
pub const DEFAULT_PROFILE_POINTS: usize = 81;

/// An executor's result plus any advisory messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Output<T> {
    pub result: T,
    pub warnings: Vec<String>,
}

impl<T> Output<T> {
    fn plain(result: T) -> Self {
        Self { result, warnings: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsRequest {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub mode: Mode,
}

/// Either explicit `odds_ratios` or a uniform log-odds-ratio grid, not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerRequest {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub mode: Mode,
    pub maf: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub kappa1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odds_ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_or_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_or_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerResponse {
    pub derived: DerivedThresholds,
    pub curve: PowerCurve,
    pub b_vs_a: PowerSummary,
    pub c_vs_a: PowerSummary,
}

/// Aberrant cohorts given either by name, each swept over a uniform grid of
/// its driving z-score on [-zeta_max, zeta_max], or with explicit frequency
/// grids in `aberrant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorProfileRequest {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub mode: Mode,
    pub base_maf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohorts: Option<Vec<Cohort>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aberrant: Option<Vec<AberrantCohort>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorProfileResponse {
    pub derived: DerivedThresholds,
    pub profile: ErrorProfile,
    pub aberrant: Vec<AberrantCohort>,
    /// Closed-form approximations; absent without replication controls.
    pub bounds: Option<AberranceBounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareRequest {
    pub thresholds: Thresholds,
    pub sweep: CompareSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McValidateRequest {
    pub design: StudyDesign,
    pub thresholds: Thresholds,
    #[serde(default)]
    pub mode: Mode,
    pub maf: f64,
    #[serde(default = "unit")]
    pub odds_ratio: f64,
    #[serde(default)]
    pub kappa0: f64,
    #[serde(default)]
    pub kappa1: f64,
    pub replicates: u64,
    pub seed: u64,
    /// Statistic moments used for the analytic side of each check.
    #[serde(default)]
    pub variance_model: VarianceModel,
}

fn unit() -> f64 {
    1.0
}

/// Analytic hit probability of one method against its MC estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub method: MethodId,
    pub analytic: f64,
    pub rate: f64,
    /// Binomial standard error at the analytic probability.
    pub std_error: f64,
    /// |rate - analytic| in standard errors.
    pub deviation_se: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McValidation {
    pub derived: DerivedThresholds,
    pub scenario: EffectScenario,
    pub seed: u64,
    pub mc: MCResult,
    pub checks: Vec<McCheck>,
    pub pass: bool,
}

fn derive(design: &StudyDesign, t: &Thresholds, mode: Mode) -> Result<DerivedThresholds> {
    design.validate_method_a()?;
    t.validate()?;
    solve_beta_star(design, &covariance(design)?, t, mode)
}

pub fn run_thresholds(req: &ThresholdsRequest) -> Result<Output<DerivedThresholds>> {
    derive(&req.design, &req.thresholds, req.mode).map(Output::plain)
}

pub fn run_power(req: &PowerRequest) -> Result<Output<PowerResponse>> {
    let dt = derive(&req.design, &req.thresholds, req.mode)?;
    let grid_given = req.log_or_min.is_some() || req.log_or_max.is_some() || req.grid_points.is_some();
    let curve = match &req.odds_ratios {
        Some(_) if grid_given => {
            return Err(Error::InvalidArgument("give either odds_ratios or a log-OR grid, not both".into()))
        }
        Some(ors) => {
            if let Some(bad) = ors.iter().find(|&&r| !(r.is_finite() && r > 0.0)) {
                return Err(Error::InvalidArgument(format!("odds ratios must be positive and finite, got {bad}")));
            }
            let log_ors: Vec<f64> = ors.iter().map(|r| r.ln()).collect();
            power_at(&dt, req.maf, req.kappa0, req.kappa1, &log_ors)?
        }
        None => power_curve(
            &dt,
            &PowerSpec {
                maf: req.maf,
                kappa0: req.kappa0,
                kappa1: req.kappa1,
                log_or_min: req.log_or_min.unwrap_or(DEFAULT_LOG_OR_MIN),
                log_or_max: req.log_or_max.unwrap_or(DEFAULT_LOG_OR_MAX),
                n_points: req.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            },
        )?,
    };
    let b_vs_a = summarize(&curve, (MethodId::A, MethodId::B));
    let c_vs_a = summarize(&curve, (MethodId::A, MethodId::C));
    Ok(Output::plain(PowerResponse { derived: dt, curve, b_vs_a, c_vs_a }))
}

pub fn run_error_profile(req: &ErrorProfileRequest) -> Result<Output<ErrorProfileResponse>> {
    let dt = derive(&req.design, &req.thresholds, req.mode)?;
    let aberrant = match (&req.cohorts, &req.aberrant) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(Error::InvalidArgument("give exactly one of cohorts or aberrant".into()))
        }
        (None, Some(a)) => {
            if req.zeta_max.is_some() || req.grid_points.is_some() {
                return Err(Error::InvalidArgument("zeta_max and grid_points apply only to cohorts".into()));
            }
            a.clone()
        }
        (Some(cs), None) => {
            let zeta_max = req.zeta_max.unwrap_or(DEFAULT_ZETA_MAX);
            let n = req.grid_points.unwrap_or(DEFAULT_PROFILE_POINTS);
            cs.iter()
                .map(|&c| driver_grid(&req.design, req.base_maf, c, zeta_max, n))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let profile = error_profile(&dt, req.base_maf, &aberrant)?;
    let bounds = aberrance_bounds(&req.design, &req.thresholds.effective(req.mode)).ok();
    Ok(Output::plain(ErrorProfileResponse { derived: dt, profile, aberrant, bounds }))
}

pub fn run_compare(req: &CompareRequest) -> Result<Output<CompareResult>> {
    req.thresholds.validate()?;
    compare(&req.sweep, &req.thresholds).map(Output::plain)
}

pub fn run_mc_validate(req: &McValidateRequest) -> Result<Output<McValidation>> {
    let dt = derive(&req.design, &req.thresholds, req.mode)?;
    let scenario = scenario_from_or_maf(req.odds_ratio, req.maf, req.kappa0, req.kappa1)?;
    let mc = simulate(&req.design, &scenario, &MCConfig { replicates: req.replicates, seed: req.seed, derived: dt })?;
    let mut checks = Vec::with_capacity(3);
    for m in MethodId::ALL {
        let analytic = hit_probability_with(m, &req.design, &scenario, &req.thresholds, &dt, req.variance_model)?;
        let rate = mc.rate(m);
        let std_error = binomial_se(analytic, req.replicates);
        let diff = (rate - analytic).abs();
        let deviation_se = if std_error > 0.0 {
            diff / std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        checks.push(McCheck { method: m, analytic, rate, std_error, deviation_se, pass: deviation_se <= 3.0 });
    }
    let mut warnings = Vec::new();
    if req.replicates < LOW_REPLICATES {
        warnings.push(LOW_REPLICATES_WARNING.to_string());
    }
    if mc.resampled > 0 {
        warnings.push(format!("{} draws resampled because a pooled frequency was 0 or 1", mc.resampled));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Output { result: McValidation { derived: dt, scenario, seed: req.seed, mc, checks, pass }, warnings })
}
