//! Correlation of two weighted-sum statistics built from per-sample
//! coefficient tables, by simulation of null genotypes and in closed form.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{chunks, stream_rng};

/// One study's statistic: mean of `c·g` over cases minus mean of `c·g` over
/// controls. Entries are `(sample id, coefficient)`; ids are shared across
/// studies, so a sample listed in both tables is a shared sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedStudy {
    pub controls: Vec<(u64, f64)>,
    pub cases: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightTable {
    pub study_i: WeightedStudy,
    pub study_j: WeightedStudy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCorrelation {
    pub correlation: f64,
    pub std_error: f64,
    /// Finite-sample value computed directly from the coefficients.
    pub closed_form: f64,
    pub replicates: u64,
}

/// Per-sample coefficient of one study's statistic.
fn coefficients(study: &WeightedStudy, label: &str) -> Result<BTreeMap<u64, f64>> {
    if study.cases.is_empty() || study.controls.is_empty() {
        return Err(Error::DegenerateWeights(format!("{label} needs cases and controls")));
    }
    let mut out = BTreeMap::new();
    for (group, sign) in [(&study.cases, 1.0), (&study.controls, -1.0)] {
        let size = group.len() as f64;
        for &(id, c) in group.iter() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::DegenerateWeights(format!(
                    "{label}: coefficient of sample {id} must be positive and finite, got {c}"
                )));
            }
            if out.insert(id, sign * c / size).is_some() {
                return Err(Error::DegenerateWeights(format!("{label}: sample {id} listed twice")));
            }
        }
    }
    Ok(out)
}

struct Dense {
    n_samples: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn dense(table: &WeightTable) -> Result<Dense> {
    let ci = coefficients(&table.study_i, "study_i")?;
    let cj = coefficients(&table.study_j, "study_j")?;
    let ids: BTreeSet<u64> = ci.keys().chain(cj.keys()).copied().collect();
    let a: Vec<f64> = ids.iter().map(|k| ci.get(k).copied().unwrap_or(0.0)).collect();
    let b: Vec<f64> = ids.iter().map(|k| cj.get(k).copied().unwrap_or(0.0)).collect();
    Ok(Dense { n_samples: ids.len(), a, b })
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Null correlation for independent, identically distributed genotypes.
pub fn weighted_correlation_closed_form(table: &WeightTable) -> Result<f64> {
    let d = dense(table)?;
    Ok((dot(&d.a, &d.b) / (dot(&d.a, &d.a) * dot(&d.b, &d.b)).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
        self
    }

    fn correlation(&self) -> f64 {
        let cxy = self.sxy - self.sx * self.sy / self.n;
        let cxx = self.sxx - self.sx * self.sx / self.n;
        let cyy = self.syy - self.sy * self.sy / self.n;
        (cxy / (cxx * cyy).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Simulate `n_reps` sets of null genotypes (two alleles per sample, each
/// minor with probability `maf`) and return the sample correlation of the
/// two studies' statistics.
pub fn covariance_simulated(
    table: &WeightTable,
    maf: f64,
    n_reps: u64,
    seed: u64,
) -> Result<SimulatedCorrelation> {
    if n_reps < 1000 {
        return Err(Error::InvalidArgument(format!("n_reps must be at least 1000, got {n_reps}")));
    }
    if !(maf > 0.0 && maf < 1.0) {
        return Err(Error::InvalidArgument(format!("maf must lie in (0,1), got {maf}")));
    }
    let d = dense(table)?;
    let closed_form = dot(&d.a, &d.b) / (dot(&d.a, &d.a) * dot(&d.b, &d.b)).sqrt();
    // Bernoulli(maf) from one 64-bit draw.
    let cut = (maf * 2f64.powi(64)) as u64;
    let moments = chunks(n_reps)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut m = Moments::default();
            for rep in lo..hi {
                let mut rng = stream_rng(seed, rep);
                let (mut x, mut y) = (0.0, 0.0);
                for k in 0..d.n_samples {
                    let g = (rng.next_u64() < cut) as u8 + (rng.next_u64() < cut) as u8;
                    if g != 0 {
                        let g = g as f64;
                        x += d.a[k] * g;
                        y += d.b[k] * g;
                    }
                }
                m.push(x, y);
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let r = moments.correlation();
    if !r.is_finite() {
        return Err(Error::DegenerateWeights("simulated statistic has zero variance".into()));
    }
    Ok(SimulatedCorrelation {
        correlation: r,
        std_error: (1.0 - r * r) / ((n_reps - 1) as f64).sqrt(),
        closed_form: closed_form.clamp(-1.0, 1.0),
        replicates: n_reps,
    })
}
