//! Monte Carlo reference: binomial allele counts per cohort, allelic z-tests
//! and the full hit rule of each method.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{
    Cohort, EffectScenario, MethodId, Statistic, StratifiedDesign, StratumWeights, StudyDesign,
};
use crate::error::{Error, Result};
use crate::rng::{chunks, stream_rng};
use crate::thresholds::DerivedThresholds;

/// Largest replicate count accepted in one call.
pub const MAX_REPLICATES: u64 = 1 << 40;
/// Largest per-cohort allele count accepted.
const MAX_ALLELES: u64 = 1 << 40;
/// Redraws allowed for one replicate before giving up on a degenerate scenario.
const MAX_REDRAWS: u32 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub replicates: u64,
    pub seed: u64,
    pub derived: DerivedThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub replicates: u64,
    pub hits: [u64; 3],
    pub rates: [f64; 3],
    pub std_errors: [f64; 3],
    /// Draws rejected because a pooled frequency was 0 or 1.
    pub resampled: u64,
    pub mean_z: [Option<f64>; 5],
    pub correlation: CorrelationEstimate,
}

impl MCResult {
    pub fn rate(&self, m: MethodId) -> f64 {
        self.rates[m as usize]
    }

    pub fn std_error(&self, m: MethodId) -> f64 {
        self.std_errors[m as usize]
    }
}

/// Sample correlations of the five statistics with approximate standard
/// errors, indexed by [`Statistic::index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub replicates: u64,
    pub rho: [[Option<f64>; 5]; 5],
    pub std_error: [[Option<f64>; 5]; 5],
}

impl CorrelationEstimate {
    pub fn rho(&self, x: Statistic, y: Statistic) -> Option<f64> {
        self.rho[x.index()][y.index()]
    }

    pub fn std_error(&self, x: Statistic, y: Statistic) -> Option<f64> {
        self.std_error[x.index()][y.index()]
    }
}

pub fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Approximate standard error of a sample correlation.
pub fn correlation_se(r: f64, n: u64) -> f64 {
    (1.0 - r * r) / ((n.max(2) - 1) as f64).sqrt()
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    s: [f64; 5],
    c: [[f64; 5]; 5],
}

impl Default for Moments {
    fn default() -> Self {
        Self { n: 0.0, s: [0.0; 5], c: [[0.0; 5]; 5] }
    }
}

impl Moments {
    fn push(&mut self, z: &[f64; 5]) {
        self.n += 1.0;
        for i in 0..5 {
            self.s[i] += z[i];
            for j in i..5 {
                self.c[i][j] += z[i] * z[j];
            }
        }
    }

    fn merge(mut self, o: &Moments) -> Moments {
        self.n += o.n;
        for i in 0..5 {
            self.s[i] += o.s[i];
            for j in i..5 {
                self.c[i][j] += o.c[i][j];
            }
        }
        self
    }

    fn estimate(&self, defined: &[bool; 5], reps: u64) -> ([Option<f64>; 5], CorrelationEstimate) {
        let mean = |i: usize| self.s[i] / self.n;
        let cov = |i: usize, j: usize| {
            let (a, b) = (i.min(j), i.max(j));
            self.c[a][b] / self.n - mean(a) * mean(b)
        };
        let mut rho = [[None; 5]; 5];
        let mut se = [[None; 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                if defined[i] && defined[j] {
                    let r = if i == j { 1.0 } else { (cov(i, j) / (cov(i, i) * cov(j, j)).sqrt()).clamp(-1.0, 1.0) };
                    if r.is_finite() {
                        rho[i][j] = Some(r);
                        se[i][j] = Some(if i == j { 0.0 } else { correlation_se(r, reps) });
                    }
                }
            }
        }
        let means = std::array::from_fn(|i| defined[i].then(|| mean(i)));
        (means, CorrelationEstimate { replicates: reps, rho, std_error: se })
    }
}

struct Sampler {
    alleles: [u64; 4],
    dists: [Option<Binomial>; 4],
    defined: [bool; 5],
}

impl Sampler {
    fn new(design: &StudyDesign, scenario: &EffectScenario) -> Result<Self> {
        design.validate()?;
        scenario.validate()?;
        let mut alleles = [0u64; 4];
        let mut dists = [None; 4];
        for c in Cohort::ALL {
            let n = design
                .count(c)
                .checked_mul(2)
                .filter(|&a| a <= MAX_ALLELES)
                .ok_or_else(|| Error::ReplicatesTooLarge(format!("cohort {} too large to simulate", c.name())))?;
            alleles[c as usize] = n;
            if n > 0 {
                dists[c as usize] = Some(
                    Binomial::new(n, scenario.mu(c)).map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?,
                );
            }
        }
        let defined = Statistic::ALL.map(|s| design.defines(s));
        Ok(Self { alleles, dists, defined })
    }

    /// One set of five z statistics, or `None` if a pooled frequency is
    /// degenerate.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<[f64; 5]> {
        let mut x = [0u64; 4];
        for k in 0..4 {
            if let Some(d) = &self.dists[k] {
                x[k] = d.sample(rng);
            }
        }
        let mut z = [f64::NAN; 5];
        for stat in Statistic::ALL {
            if !self.defined[stat.index()] {
                continue;
            }
            let group = |g: &[Cohort]| g.iter().fold((0u64, 0u64), |(a, n), &c| (a + x[c as usize], n + self.alleles[c as usize]));
            let (a1, n1) = group(stat.cases());
            let (a0, n0) = group(stat.controls());
            let pooled = (a0 + a1) as f64 / (n0 + n1) as f64;
            if a0 + a1 == 0 || a0 + a1 == n0 + n1 {
                return None;
            }
            let diff = a1 as f64 / n1 as f64 - a0 as f64 / n0 as f64;
            let var = pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n0 as f64);
            z[stat.index()] = diff / var.sqrt();
        }
        Some(z)
    }
}

impl Sampler {
    /// Draw until every pooled frequency is polymorphic; returns the z
    /// statistics and the number of rejected draws.
    fn draw_valid(&self, rng: &mut ChaCha8Rng) -> Result<([f64; 5], u64)> {
        for redraws in 0..MAX_REDRAWS {
            if let Some(z) = self.draw(rng) {
                return Ok((z, redraws as u64));
            }
        }
        Err(Error::InvalidArgument(
            "scenario almost never yields a polymorphic sample; increase cohort sizes or maf".into(),
        ))
    }
}

fn hit(z: &[f64; 5], method: MethodId, cut: &[f64; 3]) -> bool {
    let [a, b, c] = method.triple().map(|s| z[s.index()]);
    (a > cut[0] && b > cut[1] && c > cut[2]) || (a < -cut[0] && b < -cut[1] && c < -cut[2])
}

fn check_reps(reps: u64) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidArgument("replicates must be at least 1".into()));
    }
    if reps > MAX_REPLICATES {
        return Err(Error::ReplicatesTooLarge(format!("{reps} exceeds {MAX_REPLICATES}")));
    }
    Ok(())
}

/// Run `cfg.replicates` simulated studies under `scenario` and count hits for
/// each method. Results depend only on the inputs and the seed.
pub fn simulate(design: &StudyDesign, scenario: &EffectScenario, cfg: &MCConfig) -> Result<MCResult> {
    check_reps(cfg.replicates)?;
    design.validate_method_a()?;
    if cfg.derived.design != *design {
        return Err(Error::ThresholdsNotDerived);
    }
    let sampler = Sampler::new(design, scenario)?;
    let t = cfg.derived.thresholds.effective(cfg.derived.mode);
    let cuts: [[f64; 3]; 3] = {
        let mut out = [[0.0; 3]; 3];
        for m in MethodId::ALL {
            out[m as usize] = [t.z_alpha()?, cfg.derived.z_mid(m)?, t.z_gamma()?];
        }
        out
    };
    let parts = chunks(cfg.replicates)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut hits = [0u64; 3];
            let mut redraws = 0u64;
            let mut m = Moments::default();
            for rep in lo..hi {
                let mut rng = stream_rng(cfg.seed, rep);
                let (z, r) = sampler.draw_valid(&mut rng)?;
                redraws += r;
                for meth in MethodId::ALL {
                    hits[meth as usize] += hit(&z, meth, &cuts[meth as usize]) as u64;
                }
                m.push(&z);
            }
            Ok((hits, redraws, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hits = [0u64; 3];
    let mut resampled = 0;
    let mut moments = Moments::default();
    for (h, r, m) in &parts {
        for k in 0..3 {
            hits[k] += h[k];
        }
        resampled += r;
        moments = moments.merge(m);
    }
    let rates = hits.map(|h| h as f64 / cfg.replicates as f64);
    let (mean_z, correlation) = moments.estimate(&sampler.defined, cfg.replicates);
    Ok(MCResult {
        replicates: cfg.replicates,
        hits,
        rates,
        std_errors: rates.map(|p| binomial_se(p, cfg.replicates)),
        resampled,
        mean_z,
        correlation,
    })
}

/// Sample correlations of the five statistics under a common null
/// frequency `maf`.
pub fn empirical_correlation(design: &StudyDesign, maf: f64, replicates: u64, seed: u64) -> Result<CorrelationEstimate> {
    check_reps(replicates)?;
    let sampler = Sampler::new(design, &EffectScenario::null(maf))?;
    let parts = chunks(replicates)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut m = Moments::default();
            for rep in lo..hi {
                let mut rng = stream_rng(seed, rep);
                m.push(&sampler.draw_valid(&mut rng)?.0);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let moments = parts.iter().fold(Moments::default(), |a, m| a.merge(m));
    Ok(moments.estimate(&sampler.defined, replicates).1)
}

/// Correlation of the two studies' weighted stratified statistics under the
/// null, with stratum `r` at frequency `mafs[r]`.
pub fn empirical_correlation_stratified(
    design: &StratifiedDesign,
    weights: StratumWeights,
    mafs: &[f64],
    replicates: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_reps(replicates)?;
    if mafs.len() != design.strata.len() {
        return Err(Error::InvalidArgument("one frequency per stratum is required".into()));
    }
    // Disjoint parts per stratum: shared, i-only and j-only, for controls then cases.
    let mut parts = Vec::new();
    for (s, &maf) in design.strata.iter().zip(mafs) {
        if !(maf > 0.0 && maf < 1.0) {
            return Err(Error::InvalidArgument(format!("maf must lie in (0,1), got {maf}")));
        }
        if s.n0_shared > s.n0_i.min(s.n0_j) || s.n1_shared > s.n1_i.min(s.n1_j) {
            return Err(Error::InvalidDesign("shared count exceeds a study's cohort".into()));
        }
        let sizes = [
            s.n0_shared,
            s.n0_i - s.n0_shared,
            s.n0_j - s.n0_shared,
            s.n1_shared,
            s.n1_i - s.n1_shared,
            s.n1_j - s.n1_shared,
        ];
        let dists = sizes.map(|n| (n > 0).then(|| Binomial::new(2 * n, maf).expect("valid binomial")));
        parts.push((*s, dists));
    }
    let weight = |n0: u64, n1: u64| match weights {
        StratumWeights::Cmh => (n0 * n1) as f64 / (n0 + n1) as f64,
    };
    let draw = |rng: &mut ChaCha8Rng| -> (f64, f64) {
        let (mut xi, mut xj) = (0.0, 0.0);
        for (s, dists) in &parts {
            let x: [u64; 6] = std::array::from_fn(|k| dists[k].as_ref().map_or(0, |d| d.sample(rng)));
            let (c_i, c_j) = (x[0] + x[1], x[0] + x[2]);
            let (k_i, k_j) = (x[3] + x[4], x[3] + x[5]);
            if s.n0_i > 0 && s.n1_i > 0 {
                xi += weight(s.n0_i, s.n1_i) * (k_i as f64 / (2 * s.n1_i) as f64 - c_i as f64 / (2 * s.n0_i) as f64);
            }
            if s.n0_j > 0 && s.n1_j > 0 {
                xj += weight(s.n0_j, s.n1_j) * (k_j as f64 / (2 * s.n1_j) as f64 - c_j as f64 / (2 * s.n0_j) as f64);
            }
        }
        (xi, xj)
    };
    let sums = chunks(replicates)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = [0.0f64; 5];
            for rep in lo..hi {
                let mut rng = stream_rng(seed, rep);
                let (x, y) = draw(&mut rng);
                acc[0] += x;
                acc[1] += y;
                acc[2] += x * x;
                acc[3] += y * y;
                acc[4] += x * y;
            }
            acc
        })
        .collect::<Vec<_>>();
    let mut t = [0.0; 5];
    for a in &sums {
        for k in 0..5 {
            t[k] += a[k];
        }
    }
    let n = replicates as f64;
    let (mx, my) = (t[0] / n, t[1] / n);
    let r = (t[4] / n - mx * my) / ((t[2] / n - mx * mx) * (t[3] / n - my * my)).sqrt();
    if !r.is_finite() {
        return Err(Error::NoInformativeStrata);
    }
    Ok((r, correlation_se(r, replicates)))
}
