//! Study designs, effect scenarios, expected z-scores and the null
//! correlation structure of the five association statistics.
//!
//! Every statistic compares a pooled case group against a pooled control
//! group drawn from the four cohorts C0, C1 (discovery) and C0', C1'
//! (replication):
//!
//! | statistic | cases      | controls   |
//! |-----------|------------|------------|
//! | d         | C1         | C0         |
//! | r         | C1'        | C0'        |
//! | s         | C1'        | C0 ∪ C0'   |
//! | c         | C1         | C0 ∪ C0'   |
//! | m         | C1 ∪ C1'   | C0 ∪ C0'   |
//!
//! Sample sizes are individuals; expected z-scores use allele counts
//! (2n per cohort, biallelic). The factor cancels in every correlation.

mod simulated;
mod stratified;

pub use simulated::{
    covariance_simulated, weighted_correlation_closed_form, SimulatedCorrelation, WeightTable,
    WeightedStudy,
};
pub use stratified::{covariance_stratified, StratifiedDesign, Stratum, StratumWeights};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mvn::CorrMatrix3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cohort {
    C0,
    C1,
    C0p,
    C1p,
}

impl Cohort {
    pub const ALL: [Cohort; 4] = [Cohort::C0, Cohort::C1, Cohort::C0p, Cohort::C1p];

    pub fn name(self) -> &'static str {
        match self {
            Cohort::C0 => "C0",
            Cohort::C1 => "C1",
            Cohort::C0p => "C0p",
            Cohort::C1p => "C1p",
        }
    }
}

impl std::str::FromStr for Cohort {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C0" | "c0" => Ok(Cohort::C0),
            "C1" | "c1" => Ok(Cohort::C1),
            "C0p" | "c0p" | "C0'" => Ok(Cohort::C0p),
            "C1p" | "c1p" | "C1'" => Ok(Cohort::C1p),
            _ => Err(Error::InvalidArgument(format!("unknown cohort '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    D,
    R,
    S,
    C,
    M,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [Statistic::D, Statistic::R, Statistic::S, Statistic::C, Statistic::M];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Statistic::D => "d",
            Statistic::R => "r",
            Statistic::S => "s",
            Statistic::C => "c",
            Statistic::M => "m",
        }
    }

    pub fn cases(self) -> &'static [Cohort] {
        match self {
            Statistic::D | Statistic::C => &[Cohort::C1],
            Statistic::R | Statistic::S => &[Cohort::C1p],
            Statistic::M => &[Cohort::C1, Cohort::C1p],
        }
    }

    pub fn controls(self) -> &'static [Cohort] {
        match self {
            Statistic::D => &[Cohort::C0],
            Statistic::R => &[Cohort::C0p],
            Statistic::S | Statistic::C | Statistic::M => &[Cohort::C0, Cohort::C0p],
        }
    }

    /// +1 if the cohort is on the case side, -1 on the control side, 0 if unused.
    pub fn side(self, cohort: Cohort) -> f64 {
        if self.cases().contains(&cohort) {
            1.0
        } else if self.controls().contains(&cohort) {
            -1.0
        } else {
            0.0
        }
    }
}

/// The three replication procedures and the score triple each one thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodId {
    A,
    B,
    C,
}

impl MethodId {
    pub const ALL: [MethodId; 3] = [MethodId::A, MethodId::B, MethodId::C];

    /// (discovery, replication, meta-analytic) statistics.
    pub fn triple(self) -> [Statistic; 3] {
        match self {
            MethodId::A => [Statistic::D, Statistic::R, Statistic::M],
            MethodId::B => [Statistic::D, Statistic::S, Statistic::M],
            MethodId::C => [Statistic::C, Statistic::S, Statistic::M],
        }
    }
}

/// Cohort sizes in individuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyDesign {
    pub n0: u64,
    pub n1: u64,
    pub n0p: u64,
    pub n1p: u64,
}

impl StudyDesign {
    pub const fn new(n0: u64, n1: u64, n0p: u64, n1p: u64) -> Self {
        Self { n0, n1, n0p, n1p }
    }

    pub fn count(&self, cohort: Cohort) -> u64 {
        match cohort {
            Cohort::C0 => self.n0,
            Cohort::C1 => self.n1,
            Cohort::C0p => self.n0p,
            Cohort::C1p => self.n1p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n1p == 0 {
            return Err(Error::InvalidDesign("n1 and n1p must be positive".into()));
        }
        if self.n0 + self.n0p == 0 {
            return Err(Error::InvalidDesign("n0 + n0p must be positive".into()));
        }
        Ok(())
    }

    /// Method A compares C1 with C0 and C1' with C0', so both control cohorts
    /// must be non-empty.
    pub fn validate_method_a(&self) -> Result<()> {
        self.validate()?;
        if self.n0 == 0 || self.n0p == 0 {
            return Err(Error::InvalidDesign("method A requires n0 > 0 and n0p > 0".into()));
        }
        Ok(())
    }

    /// Multiply every cohort by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        Self::new(self.n0 * factor, self.n1 * factor, self.n0p * factor, self.n1p * factor)
    }

    fn group_size(&self, group: &[Cohort]) -> u64 {
        group.iter().map(|&c| self.count(c)).sum()
    }

    /// Whether both groups of the statistic are non-empty.
    pub fn defines(&self, stat: Statistic) -> bool {
        self.group_size(stat.cases()) > 0 && self.group_size(stat.controls()) > 0
    }
}

/// Expected minor allele frequency in each cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectScenario {
    pub mu0: f64,
    pub mu1: f64,
    pub mu0p: f64,
    pub mu1p: f64,
}

impl EffectScenario {
    /// Every cohort at the same frequency.
    pub fn null(maf: f64) -> Self {
        Self { mu0: maf, mu1: maf, mu0p: maf, mu1p: maf }
    }

    pub fn mu(&self, cohort: Cohort) -> f64 {
        match cohort {
            Cohort::C0 => self.mu0,
            Cohort::C1 => self.mu1,
            Cohort::C0p => self.mu0p,
            Cohort::C1p => self.mu1p,
        }
    }

    fn set(&mut self, cohort: Cohort, mu: f64) {
        match cohort {
            Cohort::C0 => self.mu0 = mu,
            Cohort::C1 => self.mu1 = mu,
            Cohort::C0p => self.mu0p = mu,
            Cohort::C1p => self.mu1p = mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Cohort::ALL {
            let mu = self.mu(c);
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "allele frequency for {} must lie in (0,1), got {mu}",
                    c.name()
                )));
            }
        }
        Ok(())
    }

    /// Swap the case and control frequencies in both studies.
    pub fn swapped(&self) -> Self {
        Self { mu0: self.mu1, mu1: self.mu0, mu0p: self.mu1p, mu1p: self.mu0p }
    }
}

/// Control and case frequencies with odds ratio `odds_ratio` and unweighted
/// mean `maf`, then mixed for false ascertainment in the replication cohorts:
/// a fraction `fa_ctrl_repl` of C0' actually comes from the case population and
/// a fraction `fa_case_repl` of C1' from the control population.
pub fn scenario_from_or_maf(
    odds_ratio: f64,
    maf: f64,
    fa_ctrl_repl: f64,
    fa_case_repl: f64,
) -> Result<EffectScenario> {
    if !(odds_ratio.is_finite() && odds_ratio > 0.0) {
        return Err(Error::Infeasible(format!("odds ratio must be positive, got {odds_ratio}")));
    }
    if !(maf > 0.0 && maf < 1.0) {
        return Err(Error::Infeasible(format!("maf must lie in (0,1), got {maf}")));
    }
    for k in [fa_ctrl_repl, fa_case_repl] {
        if !(0.0..=1.0).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "false-ascertainment fraction must lie in [0,1], got {k}"
            )));
        }
    }

    // With mu1 = 2 maf - mu0 the odds-ratio condition is the quadratic
    // (R-1) mu0^2 + (R(1-2 maf) + 2 maf + 1) mu0 - 2 maf = 0.
    let r = odds_ratio;
    let qa = r - 1.0;
    let qb = r * (1.0 - 2.0 * maf) + 2.0 * maf + 1.0;
    let qc = -2.0 * maf;
    let lo = (2.0 * maf - 1.0).max(0.0);
    let hi = (2.0 * maf).min(1.0);
    let inside = |x: f64| x > lo && x < hi;
    let mu0 = if qa.abs() < 1e-15 {
        -qc / qb
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return Err(Error::Infeasible(format!("OR={odds_ratio}, maf={maf}")));
        }
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        let roots = [q / qa, qc / q];
        match roots.into_iter().find(|&x| inside(x)) {
            Some(x) => x,
            None => return Err(Error::Infeasible(format!("OR={odds_ratio}, maf={maf}"))),
        }
    };
    let mu1 = 2.0 * maf - mu0;
    if !(inside(mu0) && mu1 > 0.0 && mu1 < 1.0) {
        return Err(Error::Infeasible(format!("OR={odds_ratio}, maf={maf}")));
    }
    Ok(EffectScenario {
        mu0,
        mu1,
        mu0p: (1.0 - fa_ctrl_repl) * mu0 + fa_ctrl_repl * mu1,
        mu1p: (1.0 - fa_case_repl) * mu1 + fa_case_repl * mu0,
    })
}

/// `base` with the frequency of one cohort replaced. Calls compose, so
/// multi-cohort aberrance is built by chaining.
pub fn aberrant_scenario(base: &EffectScenario, cohort: Cohort, shifted_mu: f64) -> EffectScenario {
    let mut s = *base;
    s.set(cohort, shifted_mu);
    s
}

/// Expected signed z-scores. A component is `None` when one of the groups
/// it compares is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaVector {
    pub zeta_d: Option<f64>,
    pub zeta_r: Option<f64>,
    pub zeta_s: Option<f64>,
    pub zeta_c: Option<f64>,
    pub zeta_m: Option<f64>,
}

impl ZetaVector {
    pub fn get(&self, stat: Statistic) -> Option<f64> {
        match stat {
            Statistic::D => self.zeta_d,
            Statistic::R => self.zeta_r,
            Statistic::S => self.zeta_s,
            Statistic::C => self.zeta_c,
            Statistic::M => self.zeta_m,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            zeta_d: self.zeta_d.map(|x| -x),
            zeta_r: self.zeta_r.map(|x| -x),
            zeta_s: self.zeta_s.map(|x| -x),
            zeta_c: self.zeta_c.map(|x| -x),
            zeta_m: self.zeta_m.map(|x| -x),
        }
    }
}

fn zeta_component(design: &StudyDesign, scenario: &EffectScenario, stat: Statistic) -> Option<f64> {
    // Allele counts 2n; the first-order expected z of an allelic test.
    let weighted = |group: &[Cohort]| -> (f64, f64) {
        group.iter().fold((0.0, 0.0), |(n, s), &c| {
            let k = 2.0 * design.count(c) as f64;
            (n + k, s + k * scenario.mu(c))
        })
    };
    let (n_case, s_case) = weighted(stat.cases());
    let (n_ctrl, s_ctrl) = weighted(stat.controls());
    if n_case == 0.0 || n_ctrl == 0.0 {
        return None;
    }
    let mean_case = s_case / n_case;
    let mean_ctrl = s_ctrl / n_ctrl;
    let pooled = (s_case + s_ctrl) / (n_case + n_ctrl);
    let scale = (n_case * n_ctrl / (n_case + n_ctrl)).sqrt();
    Some(scale * (mean_case - mean_ctrl) / (pooled * (1.0 - pooled)).sqrt())
}

pub fn zeta(design: &StudyDesign, scenario: &EffectScenario) -> Result<ZetaVector> {
    design.validate()?;
    scenario.validate()?;
    let z = |s| zeta_component(design, scenario, s);
    Ok(ZetaVector {
        zeta_d: z(Statistic::D),
        zeta_r: z(Statistic::R),
        zeta_s: z(Statistic::S),
        zeta_c: z(Statistic::C),
        zeta_m: z(Statistic::M),
    })
}

/// Standard deviations and correlations of the z-scores when the cohort
/// frequencies are those of `scenario`: a first-order expansion in the
/// cohort frequencies of both the allele-frequency difference and the
/// estimated pooled variance it is divided by. Under a null scenario this
/// reproduces the unit variances and [`covariance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMoments {
    pub sd: [Option<f64>; 5],
    pub rho: [[Option<f64>; 5]; 5],
}

impl ScenarioMoments {
    pub fn sd(&self, stat: Statistic) -> Option<f64> {
        self.sd[stat.index()]
    }

    pub fn rho(&self, x: Statistic, y: Statistic) -> Option<f64> {
        self.rho[x.index()][y.index()]
    }
}

pub fn scenario_moments(design: &StudyDesign, scenario: &EffectScenario) -> Result<ScenarioMoments> {
    let z = zeta(design, scenario)?;
    // grad[x][k]: derivative of z_x with respect to the frequency of cohort k.
    let mut grad = [[0.0; 4]; 5];
    let mut defined = [false; 5];
    for stat in Statistic::ALL {
        let Some(zeta_x) = z.get(stat) else { continue };
        defined[stat.index()] = true;
        let alleles = |g: &[Cohort]| 2.0 * design.group_size(g) as f64;
        let (n_case, n_ctrl) = (alleles(stat.cases()), alleles(stat.controls()));
        let total = n_case + n_ctrl;
        let pooled: f64 = Cohort::ALL
            .into_iter()
            .filter(|&c| stat.side(c) != 0.0)
            .map(|c| 2.0 * design.count(c) as f64 * scenario.mu(c))
            .sum::<f64>()
            / total;
        let scale = (pooled * (1.0 - pooled) * (1.0 / n_case + 1.0 / n_ctrl)).sqrt();
        let log_scale_slope = (1.0 - 2.0 * pooled) / (2.0 * pooled * (1.0 - pooled));
        for (k, c) in Cohort::ALL.into_iter().enumerate() {
            let n = 2.0 * design.count(c) as f64;
            let side = stat.side(c);
            let diff = if side > 0.0 {
                n / n_case
            } else if side < 0.0 {
                -n / n_ctrl
            } else {
                continue;
            };
            grad[stat.index()][k] = diff / scale - zeta_x * log_scale_slope * n / total;
        }
    }
    let cov = |x: usize, y: usize| -> f64 {
        Cohort::ALL
            .into_iter()
            .enumerate()
            .filter(|(_, c)| design.count(*c) > 0)
            .map(|(k, c)| {
                let mu = scenario.mu(c);
                grad[x][k] * grad[y][k] * mu * (1.0 - mu) / (2.0 * design.count(c) as f64)
            })
            .sum()
    };
    let mut sd = [None; 5];
    let mut rho = [[None; 5]; 5];
    for x in (0..5).filter(|&x| defined[x]) {
        sd[x] = Some(cov(x, x).sqrt());
        for y in (0..5).filter(|&y| defined[y]) {
            rho[x][y] = Some((cov(x, y) / (cov(x, x) * cov(y, y)).sqrt()).clamp(-1.0, 1.0));
        }
    }
    Ok(ScenarioMoments { sd, rho })
}

/// Null correlation of two statistics from shared-cohort bookkeeping: each is
/// a difference of group means of independent cohort frequencies with
/// variance proportional to 1/n.
pub(crate) fn pair_correlation(design: &StudyDesign, x: Statistic, y: Statistic) -> Option<f64> {
    if !(design.defines(x) && design.defines(y)) {
        return None;
    }
    let size = |group: &[Cohort]| design.group_size(group) as f64;
    let coef = |stat: Statistic, c: Cohort| -> f64 {
        let side = stat.side(c);
        if side > 0.0 {
            1.0 / size(stat.cases())
        } else if side < 0.0 {
            -1.0 / size(stat.controls())
        } else {
            0.0
        }
    };
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for c in Cohort::ALL {
        let n = design.count(c) as f64;
        let (a, b) = (coef(x, c), coef(y, c));
        cov += a * b * n;
        var_x += a * a * n;
        var_y += b * b * n;
    }
    Some((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation matrices of the three methods' score triples and the full
/// pairwise map.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSet {
    rho: [[Option<f64>; 5]; 5],
    pub sigma_a: Option<CorrMatrix3>,
    pub sigma_b: Option<CorrMatrix3>,
    pub sigma_c: Option<CorrMatrix3>,
}

impl CovarianceSet {
    pub fn rho(&self, x: Statistic, y: Statistic) -> Option<f64> {
        self.rho[x.index()][y.index()]
    }

    pub fn sigma(&self, method: MethodId) -> Option<&CorrMatrix3> {
        match method {
            MethodId::A => self.sigma_a.as_ref(),
            MethodId::B => self.sigma_b.as_ref(),
            MethodId::C => self.sigma_c.as_ref(),
        }
    }

    pub fn is_singular(&self, method: MethodId) -> Option<bool> {
        self.sigma(method).map(CorrMatrix3::is_singular)
    }
}

pub fn covariance(design: &StudyDesign) -> Result<CovarianceSet> {
    design.validate()?;
    let mut rho = [[None; 5]; 5];
    for x in Statistic::ALL {
        for y in Statistic::ALL {
            rho[x.index()][y.index()] = pair_correlation(design, x, y);
        }
    }
    let triple = |m: MethodId| -> Result<Option<CorrMatrix3>> {
        let [a, b, c] = m.triple();
        let get = |x: Statistic, y: Statistic| rho[x.index()][y.index()];
        match (get(a, b), get(a, c), get(b, c)) {
            (Some(r12), Some(r13), Some(r23)) => {
                Ok(Some(CorrMatrix3::labelled(r12, r13, r23, [a.name(), b.name(), c.name()])?))
            }
            _ => Ok(None),
        }
    };
    Ok(CovarianceSet {
        rho,
        sigma_a: triple(MethodId::A)?,
        sigma_b: triple(MethodId::B)?,
        sigma_c: triple(MethodId::C)?,
    })
}
