use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use repshare_core::analysis::{CompareSpec, VarianceModel};
use repshare_core::design::{Cohort, StudyDesign};
use repshare_core::service::{
    CompareRequest, ErrorProfileRequest, McValidateRequest, PowerRequest, ThresholdsRequest,
};
use repshare_core::thresholds::{Mode, Thresholds};

use crate::Failure;

/// Replication thresholds, power and type-1 error for two-stage
/// case-control studies with shared controls.
#[derive(Debug, Parser)]
#[command(name = "repshare", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Read the request as JSON instead of from flags.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Output format; csv for grids and json for scalars by default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Print only data.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceArg {
    Null,
    Alternative,
}

impl From<VarianceArg> for VarianceModel {
    fn from(v: VarianceArg) -> Self {
        match v {
            VarianceArg::Null => VarianceModel::Null,
            VarianceArg::Alternative => VarianceModel::Alternative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    General,
    Gamma1,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::General => Mode::General,
            ModeArg::Gamma1 => Mode::Gamma1,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the adjusted replication cutoffs.
    Thresholds(ThresholdsArgs),
    /// Power of each method over a range of odds ratios.
    Power(PowerArgs),
    /// Type-1 error of each method under cohort aberrance.
    ErrorProfile(ProfileArgs),
    /// Sweep replication splits for methods A and B.
    Compare(CompareArgs),
    /// Check analytic hit probabilities against simulation.
    McValidate(McArgs),
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::invalid(format!("missing {flag} (or give --input)")))
}

#[derive(Debug, Args)]
pub struct DesignFlags {
    #[arg(long)]
    pub n0: Option<u64>,
    #[arg(long)]
    pub n1: Option<u64>,
    #[arg(long)]
    pub n0p: Option<u64>,
    #[arg(long)]
    pub n1p: Option<u64>,
}

impl DesignFlags {
    fn any(&self) -> bool {
        self.n0.is_some() || self.n1.is_some() || self.n0p.is_some() || self.n1p.is_some()
    }

    fn design(&self) -> Result<StudyDesign, Failure> {
        Ok(StudyDesign::new(
            need(self.n0, "--n0")?,
            need(self.n1, "--n1")?,
            need(self.n0p, "--n0p")?,
            need(self.n1p, "--n1p")?,
        ))
    }
}

#[derive(Debug, Args)]
pub struct ThresholdFlags {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Combined cutoff; 1 leaves it unconstrained.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// gamma1 ignores the combined cutoff.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

impl ThresholdFlags {
    fn any(&self) -> bool {
        self.alpha.is_some() || self.beta.is_some() || self.gamma.is_some() || self.mode.is_some()
    }

    fn thresholds(&self) -> Result<Thresholds, Failure> {
        Ok(Thresholds::new(need(self.alpha, "--alpha")?, need(self.beta, "--beta")?, need(self.gamma, "--gamma")?))
    }

    fn mode(&self) -> Mode {
        self.mode.map(Mode::from).unwrap_or_default()
    }
}

#[derive(Debug, Args)]
pub struct EffectFlags {
    #[arg(long)]
    pub maf: Option<f64>,
    /// Fraction of replication controls drawn from the case population.
    #[arg(long)]
    pub kappa0: Option<f64>,
    /// Fraction of replication cases drawn from the control population.
    #[arg(long)]
    pub kappa1: Option<f64>,
}

impl EffectFlags {
    fn any(&self) -> bool {
        self.maf.is_some() || self.kappa0.is_some() || self.kappa1.is_some()
    }
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub design: DesignFlags,
    #[command(flatten)]
    pub thresholds: ThresholdFlags,
}

impl ThresholdsArgs {
    pub fn any_flag(&self) -> bool {
        self.design.any() || self.thresholds.any()
    }

    pub fn to_request(&self) -> Result<ThresholdsRequest, Failure> {
        Ok(ThresholdsRequest {
            design: self.design.design()?,
            thresholds: self.thresholds.thresholds()?,
            mode: self.thresholds.mode(),
        })
    }
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    pub design: DesignFlags,
    #[command(flatten)]
    pub thresholds: ThresholdFlags,
    #[command(flatten)]
    pub effect: EffectFlags,
    /// Explicit odds ratios, instead of a log-OR grid.
    #[arg(long = "or", value_delimiter = ',', num_args = 1..)]
    pub odds_ratios: Vec<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub log_or_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub log_or_max: Option<f64>,
}

impl PowerArgs {
    pub fn any_flag(&self) -> bool {
        self.design.any()
            || self.thresholds.any()
            || self.effect.any()
            || !self.odds_ratios.is_empty()
            || self.grid_points.is_some()
            || self.log_or_min.is_some()
            || self.log_or_max.is_some()
    }

    pub fn to_request(&self) -> Result<PowerRequest, Failure> {
        Ok(PowerRequest {
            design: self.design.design()?,
            thresholds: self.thresholds.thresholds()?,
            mode: self.thresholds.mode(),
            maf: need(self.effect.maf, "--maf")?,
            kappa0: self.effect.kappa0.unwrap_or(0.0),
            kappa1: self.effect.kappa1.unwrap_or(0.0),
            odds_ratios: (!self.odds_ratios.is_empty()).then(|| self.odds_ratios.clone()),
            log_or_min: self.log_or_min,
            log_or_max: self.log_or_max,
            grid_points: self.grid_points,
        })
    }
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub design: DesignFlags,
    #[command(flatten)]
    pub thresholds: ThresholdFlags,
    /// Null allele frequency of the non-aberrant cohorts.
    #[arg(long)]
    pub maf: Option<f64>,
    /// Aberrant cohorts (C0, C1, C0p, C1p), comma separated or repeated.
    #[arg(long = "cohort", alias = "cohorts", value_delimiter = ',', num_args = 1..)]
    pub cohorts: Vec<Cohort>,
    /// Largest driving z-score on the grid.
    #[arg(long)]
    pub zeta_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
}

impl ProfileArgs {
    pub fn any_flag(&self) -> bool {
        self.design.any()
            || self.thresholds.any()
            || self.maf.is_some()
            || !self.cohorts.is_empty()
            || self.zeta_max.is_some()
            || self.grid_points.is_some()
    }

    pub fn to_request(&self) -> Result<ErrorProfileRequest, Failure> {
        if self.cohorts.is_empty() {
            return Err(Failure::invalid("missing --cohort (or give --input)"));
        }
        Ok(ErrorProfileRequest {
            design: self.design.design()?,
            thresholds: self.thresholds.thresholds()?,
            mode: self.thresholds.mode(),
            base_maf: need(self.maf, "--maf")?,
            cohorts: Some(self.cohorts.clone()),
            aberrant: None,
            zeta_max: self.zeta_max,
            grid_points: self.grid_points,
        })
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub n0: Option<u64>,
    #[arg(long)]
    pub n1: Option<u64>,
    /// Replication samples to split between controls and cases.
    #[arg(long)]
    pub new_samples: Option<u64>,
    /// Smallest replication control count; defaults to the step.
    #[arg(long)]
    pub n0p_min: Option<u64>,
    /// Largest replication control count; defaults to new-samples minus the step.
    #[arg(long)]
    pub n0p_max: Option<u64>,
    /// Split grid step; defaults to a twentieth of new-samples.
    #[arg(long)]
    pub n0p_step: Option<u64>,
    #[command(flatten)]
    pub thresholds: ThresholdFlags,
    #[command(flatten)]
    pub effect: EffectFlags,
    #[arg(long = "or", value_delimiter = ',', num_args = 1..)]
    pub odds_ratios: Vec<f64>,
}

impl CompareArgs {
    pub fn any_flag(&self) -> bool {
        self.n0.is_some()
            || self.n1.is_some()
            || self.new_samples.is_some()
            || self.n0p_min.is_some()
            || self.n0p_max.is_some()
            || self.n0p_step.is_some()
            || self.thresholds.any()
            || self.effect.any()
            || !self.odds_ratios.is_empty()
    }

    pub fn to_request(&self) -> Result<CompareRequest, Failure> {
        if self.odds_ratios.is_empty() {
            return Err(Failure::invalid("missing --or (or give --input)"));
        }
        let new_samples = need(self.new_samples, "--new-samples")?;
        let step = self.n0p_step.unwrap_or((new_samples / 20).max(1));
        Ok(CompareRequest {
            thresholds: self.thresholds.thresholds()?,
            sweep: CompareSpec {
                n0: need(self.n0, "--n0")?,
                n1: need(self.n1, "--n1")?,
                new_samples,
                n0p_min: self.n0p_min.unwrap_or(step),
                n0p_max: self.n0p_max.unwrap_or(new_samples.saturating_sub(step)),
                n0p_step: step,
                maf: need(self.effect.maf, "--maf")?,
                odds_ratios: self.odds_ratios.clone(),
                kappa0: self.effect.kappa0.unwrap_or(0.0),
                kappa1: self.effect.kappa1.unwrap_or(0.0),
                mode: self.thresholds.mode(),
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub design: DesignFlags,
    #[command(flatten)]
    pub thresholds: ThresholdFlags,
    #[command(flatten)]
    pub effect: EffectFlags,
    /// Odds ratio of the simulated scenario; 1 checks the null.
    #[arg(long = "or")]
    pub odds_ratio: Option<f64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Moments behind the analytic rates; alternative accounts for the effect
    #[arg(long, value_enum)]
    pub variance_model: Option<VarianceArg>,
}

impl McArgs {
    pub fn any_flag(&self) -> bool {
        self.design.any()
            || self.thresholds.any()
            || self.effect.any()
            || self.odds_ratio.is_some()
            || self.reps.is_some()
            || self.seed.is_some()
            || self.variance_model.is_some()
    }

    pub fn to_request(&self) -> Result<McValidateRequest, Failure> {
        Ok(McValidateRequest {
            design: self.design.design()?,
            thresholds: self.thresholds.thresholds()?,
            mode: self.thresholds.mode(),
            maf: need(self.effect.maf, "--maf")?,
            odds_ratio: self.odds_ratio.unwrap_or(1.0),
            kappa0: self.effect.kappa0.unwrap_or(0.0),
            kappa1: self.effect.kappa1.unwrap_or(0.0),
            replicates: need(self.reps, "--reps")?,
            seed: need(self.seed, "--seed")?,
            variance_model: self.variance_model.map(VarianceModel::from).unwrap_or_default(),
        })
    }
}
