//! Gaussian kernels: the univariate CDF and quantile, and upper-orthant
//! probabilities `P(X > a, Y > b[, Z > c])` for zero-mean unit-variance
//! correlated normals.
//!
//! Trivariate orthants are computed by one-dimensional adaptive quadrature
//! over the coordinate with the largest lower bound, with the conditional
//! bivariate orthant in closed form. Singular correlation matrices (det at or
//! below [`EPS_SING`]) are reduced to a bivariate density integrated over the
//! region cut out by the linear dependence.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};

/// PSD slack on determinants and 2x2 minors.
pub const EPS_PSD: f64 = 1e-9;
/// Determinant at or below which a 3x3 correlation is treated as singular.
pub const EPS_SING: f64 = 1e-8;
/// Semi-infinite integrals are truncated this far into the tail.
pub const TAIL: f64 = 8.5;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_87;
/// Below this the bivariate orthant is recomputed by quadrature so that tiny
/// tail probabilities keep relative accuracy.
const ORTHANT2_REFINE_BELOW: f64 = 1e-7;
const QUAD_TOL: Tolerance = Tolerance::new(1e-300, 1e-10);
const QUAD_PANELS: usize = 400;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
fn phi_upper(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("norm_cdf of NaN".into()));
    }
    Ok(phi(x))
}

/// Upper tail `1 - Φ(x)`, accurate in the far right tail.
pub fn norm_sf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidArgument("norm_sf of NaN".into()));
    }
    Ok(phi_upper(x))
}

fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Wichura's AS 241 (PPND16) followed by one Halley step against `erfc`.
fn quantile_lower(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];

    let q = p - 0.5;
    let mut x = if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        q * poly(&A, r) / poly(&B, r)
    } else {
        let r = (-p.ln()).sqrt();
        let v = if r <= 5.0 {
            let r = r - 1.6;
            poly(&C, r) / poly(&D, r)
        } else {
            let r = r - 5.0;
            poly(&E, r) / poly(&F, r)
        };
        -v
    };
    // p <= 0.5 here, so Φ(x) is computed without cancellation.
    let e = phi(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    if u.is_finite() {
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// Standard normal quantile `Φ⁻¹(p)` for `p` in (0, 1).
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile requires 0 < p < 1, got {p}")));
    }
    if p <= 0.5 {
        Ok(quantile_lower(p))
    } else {
        Ok(-quantile_lower(1.0 - p))
    }
}

/// Symmetric 3x3 correlation matrix, checked positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrMatrix3 {
    rho_12: f64,
    rho_13: f64,
    rho_23: f64,
    labels: [&'static str; 3],
}

impl CorrMatrix3 {
    pub fn new(rho_12: f64, rho_13: f64, rho_23: f64) -> Result<Self> {
        Self::labelled(rho_12, rho_13, rho_23, ["1", "2", "3"])
    }

    pub fn labelled(rho_12: f64, rho_13: f64, rho_23: f64, labels: [&'static str; 3]) -> Result<Self> {
        for (name, r) in [("rho_12", rho_12), ("rho_13", rho_13), ("rho_23", rho_23)] {
            if !r.is_finite() || r.abs() > 1.0 + EPS_PSD {
                return Err(Error::InvalidCovariance(format!("{name} = {r} outside [-1, 1]")));
            }
        }
        let m = Self {
            rho_12: rho_12.clamp(-1.0, 1.0),
            rho_13: rho_13.clamp(-1.0, 1.0),
            rho_23: rho_23.clamp(-1.0, 1.0),
            labels,
        };
        let det = m.det();
        if det < -EPS_PSD {
            return Err(Error::InvalidCovariance(format!(
                "not positive semidefinite (det = {det:e})"
            )));
        }
        Ok(m)
    }

    /// Identity correlation.
    pub fn independent() -> Self {
        Self { rho_12: 0.0, rho_13: 0.0, rho_23: 0.0, labels: ["1", "2", "3"] }
    }

    pub fn rho_12(&self) -> f64 {
        self.rho_12
    }
    pub fn rho_13(&self) -> f64 {
        self.rho_13
    }
    pub fn rho_23(&self) -> f64 {
        self.rho_23
    }
    pub fn labels(&self) -> [&'static str; 3] {
        self.labels
    }

    /// Entry `(i, j)`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i.min(j), i.max(j)) {
            (a, b) if a == b => 1.0,
            (0, 1) => self.rho_12,
            (0, 2) => self.rho_13,
            (1, 2) => self.rho_23,
            _ => panic!("index out of range for 3x3 matrix"),
        }
    }

    pub fn det(&self) -> f64 {
        let (a, b, c) = (self.rho_12, self.rho_13, self.rho_23);
        1.0 - a * a - b * b - c * c + 2.0 * a * b * c
    }

    pub fn is_singular(&self) -> bool {
        self.det() <= EPS_SING
    }
}

/// Lower integration limits (z-score units; `-inf` marginalizes a coordinate)
/// together with the correlation of the three coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthant3Query {
    pub lower: [f64; 3],
    pub corr: CorrMatrix3,
}

impl Orthant3Query {
    pub fn new(a: f64, b: f64, c: f64, corr: CorrMatrix3) -> Self {
        Self { lower: [a, b, c], corr }
    }
}

/// Genz's bivariate upper orthant `P(X > h, Y > k)` (Drezner–Wesolowsky with
/// Gauss–Legendre rules), absolute accuracy around 1e-15.
fn bvnu(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { phi_upper(k) };
    }
    if k == f64::NEG_INFINITY {
        return phi_upper(h);
    }
    if r == 0.0 {
        return phi_upper(h) * phi_upper(k);
    }
    if r >= 1.0 {
        return phi_upper(h.max(k));
    }
    if r <= -1.0 {
        // Y = -X: h < X < -k.
        return if -k > h {
            if h >= 0.0 {
                phi_upper(h) - phi_upper(-k)
            } else {
                phi(-k) - phi(h)
            }
        } else {
            0.0
        };
    }

    const W6: [f64; 3] = [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4];
    const X6: [f64; 3] = [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197];
    const W12: [f64; 6] = [
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
    ];
    const X12: [f64; 6] = [
        0.981_560_634_246_719_1,
        0.904_117_256_370_475,
        0.769_902_674_194_305,
        0.587_317_954_286_617_1,
        0.367_831_498_998_180_2,
        0.125_233_408_511_469_2,
    ];
    const W20: [f64; 10] = [
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ];
    const X20: [f64; 10] = [
        0.993_128_599_185_094_9,
        0.963_971_927_277_913_8,
        0.912_234_428_251_325_9,
        0.839_116_971_822_218_8,
        0.746_331_906_460_150_8,
        0.636_053_680_726_515,
        0.510_867_001_950_827_1,
        0.373_706_088_715_419_6,
        0.227_785_851_141_645_1,
        0.076_526_521_133_497_33,
    ];
    let (w, x): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&W6, &X6)
    } else if r.abs() < 0.75 {
        (&W12, &X12)
    } else {
        (&W20, &X20)
    };
    let tp = 2.0 * PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = 0.5 * r.asin();
        for (&wi, &xi) in w.iter().zip(x) {
            for node in [1.0 - xi, 1.0 + xi] {
                let sn = (asr * node).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + phi_upper(h) * phi_upper(k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        let mut a2 = 1.0 - r * r;
        let mut a = a2.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 80.0;
        let asr = -0.5 * (bs / a2 + hk);
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - a2) * (1.0 - d * bs) / 3.0 + c * d * a2 * a2);
        }
        if hk > -100.0 {
            let b = bs.sqrt();
            let sp = tp.sqrt() * phi_upper(b / a);
            bvn -= (-0.5 * hk).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
        }
        a *= 0.5;
        a2 = 0.0;
        for (&wi, &xi) in w.iter().zip(x) {
            for node in [1.0 - xi, 1.0 + xi] {
                let xs = (a * node) * (a * node);
                let asr = -0.5 * (bs / xs + hk);
                if asr > -100.0 {
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let rs = (1.0 - xs).sqrt();
                    let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                    a2 += wi * asr.exp() * (sp - ep);
                }
            }
        }
        bvn = (a * a2 - bvn) / tp;
        if r > 0.0 {
            bvn += phi_upper(h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 { phi(k) - phi(h) } else { phi_upper(h) - phi_upper(k) };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X > h, Y > k)` by quadrature over the coordinate with the larger bound,
/// used where the closed form loses relative accuracy.
fn bvnu_quad(h: f64, k: f64, r: f64) -> f64 {
    let (outer, inner) = if h >= k { (h, k) } else { (k, h) };
    let s = (1.0 - r * r).sqrt();
    let lo = outer.max(-TAIL);
    let hi = outer.max(0.0) + TAIL;
    if lo >= hi {
        return 0.0;
    }
    let mut knots = vec![lo, hi];
    if r != 0.0 {
        let kink = inner / r;
        if kink > lo && kink < hi {
            knots.push(kink);
        }
    }
    integrate(
        |x| norm_pdf(x) * phi_upper((inner - r * x) / s),
        &knots,
        QUAD_TOL,
        QUAD_PANELS,
    )
    .value
}

fn orthant2_raw(h: f64, k: f64, r: f64) -> f64 {
    let p = bvnu(h, k, r);
    if p < ORTHANT2_REFINE_BELOW && h.is_finite() && k.is_finite() && r.abs() < 1.0 {
        bvnu_quad(h, k, r)
    } else {
        p
    }
}

/// `P(X > a, Y > b)` for a standard bivariate normal with correlation `rho`.
/// At `|rho| = 1` the degenerate formula is used.
pub fn orthant2(a: f64, b: f64, rho: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || rho.is_nan() {
        return Err(Error::InvalidArgument("orthant2 with NaN argument".into()));
    }
    if rho.abs() > 1.0 + EPS_PSD {
        return Err(Error::InvalidCovariance(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok(orthant2_raw(a, b, rho.clamp(-1.0, 1.0)))
}

/// `P(X > a, Y > b, Z > c)` for the query's correlation.
pub fn orthant3(q: &Orthant3Query) -> Result<f64> {
    if q.lower.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("orthant3 with NaN bound".into()));
    }
    let corr = &q.corr;
    if corr.det() < -EPS_PSD {
        return Err(Error::InvalidCovariance(format!("det = {:e}", corr.det())));
    }
    if q.lower.iter().any(|&x| x == f64::INFINITY) {
        return Ok(0.0);
    }
    let active: Vec<usize> = (0..3).filter(|&i| q.lower[i] > f64::NEG_INFINITY).collect();
    Ok(match active.as_slice() {
        [] => 1.0,
        [i] => phi_upper(q.lower[*i]),
        [i, j] => orthant2_raw(q.lower[*i], q.lower[*j], corr.get(*i, *j)),
        _ if corr.is_singular() => singular_orthant3(&q.lower, corr),
        _ => regular_orthant3(&q.lower, corr),
    })
}

fn push_knot(knots: &mut Vec<f64>, x: f64, lo: f64, hi: f64) {
    if x.is_finite() && x > lo && x < hi {
        knots.push(x);
    }
}

fn regular_orthant3(lower: &[f64; 3], corr: &CorrMatrix3) -> f64 {
    let outer = (0..3)
        .max_by(|&x, &y| lower[x].total_cmp(&lower[y]))
        .expect("three coordinates");
    let (j, k) = match outer {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (r_oj, r_ok, r_jk) = (corr.get(outer, j), corr.get(outer, k), corr.get(j, k));
    let s_j = (1.0 - r_oj * r_oj).sqrt();
    let s_k = (1.0 - r_ok * r_ok).sqrt();
    let r_cond = ((r_jk - r_oj * r_ok) / (s_j * s_k)).clamp(-1.0, 1.0);
    let (b_j, b_k) = (lower[j], lower[k]);

    let lo = lower[outer].max(-TAIL);
    let hi = lower[outer].max(0.0) + TAIL;
    if lo >= hi {
        return 0.0;
    }
    let mut knots = vec![lo, hi];
    push_knot(&mut knots, b_j / r_oj, lo, hi);
    push_knot(&mut knots, b_k / r_ok, lo, hi);

    integrate(
        |x| {
            let h = (b_j - r_oj * x) / s_j;
            let g = (b_k - r_ok * x) / s_k;
            norm_pdf(x) * orthant2_raw(h, g, r_cond)
        },
        &knots,
        QUAD_TOL,
        QUAD_PANELS,
    )
    .value
    .clamp(0.0, 1.0)
}

/// `P(lo < N(mean, sd^2) < hi)` evaluated on the side that avoids cancellation.
fn normal_interval(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    let l = (lo - mean) / sd;
    let u = (hi - mean) / sd;
    if !(u > l) {
        return 0.0;
    }
    if l > 0.0 {
        phi_upper(l) - phi_upper(u)
    } else {
        phi(u) - phi(l)
    }
}

fn singular_orthant3(lower: &[f64; 3], corr: &CorrMatrix3) -> f64 {
    // Keep the least correlated pair and express the third coordinate through it.
    let pairs = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
    let &(i, j, k) = pairs
        .iter()
        .min_by(|x, y| corr.get(x.0, x.1).abs().total_cmp(&corr.get(y.0, y.1).abs()))
        .expect("three pairs");
    let r_ij = corr.get(i, j);

    if 1.0 - r_ij * r_ij < 1e-12 {
        // Rank one: every coordinate is ±Z.
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (m, &b) in lower.iter().enumerate() {
            let sign = if m == 0 { 1.0 } else { corr.get(0, m).signum() };
            if sign > 0.0 {
                lo = lo.max(b);
            } else {
                hi = hi.min(-b);
            }
        }
        return normal_interval(lo, hi, 0.0, 1.0);
    }

    let (r_ik, r_jk) = (corr.get(i, k), corr.get(j, k));
    let denom = r_ij * r_ij - 1.0;
    let w_i = (r_ij * r_jk - r_ik) / denom;
    let w_j = (r_ij * r_ik - r_jk) / denom;

    // Integrate over whichever kept coordinate has the larger bound.
    let (o, q, w_o, w_q) = if lower[i] >= lower[j] { (i, j, w_i, w_j) } else { (j, i, w_j, w_i) };
    let (a_o, a_q, c) = (lower[o], lower[q], lower[k]);
    let s = (1.0 - r_ij * r_ij).sqrt();
    const EPS_W: f64 = 1e-12;

    let inner = |x: f64| -> f64 {
        let mean = r_ij * x;
        let mut lo = a_q;
        let mut hi = f64::INFINITY;
        if w_q > EPS_W {
            lo = lo.max((c - w_o * x) / w_q);
        } else if w_q < -EPS_W {
            hi = (c - w_o * x) / w_q;
        } else if w_o * x <= c {
            return 0.0;
        }
        normal_interval(lo, hi, mean, s)
    };

    let lo = a_o.max(-TAIL);
    let hi = a_o.max(0.0) + TAIL;
    if lo >= hi {
        return 0.0;
    }
    let mut knots = vec![lo, hi];
    if w_o.abs() > EPS_W {
        push_knot(&mut knots, (c - w_q * a_q) / w_o, lo, hi);
        push_knot(&mut knots, c / w_o, lo, hi);
    }
    push_knot(&mut knots, a_q / r_ij, lo, hi);
    let slope = w_o + w_q * r_ij;
    if slope.abs() > EPS_W {
        push_knot(&mut knots, c / slope, lo, hi);
    }

    integrate(|x| norm_pdf(x) * inner(x), &knots, QUAD_TOL, QUAD_PANELS)
        .value
        .clamp(0.0, 1.0)
}
