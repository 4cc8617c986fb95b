use proptest::prelude::*;
use repshare_core::design::{
    aberrant_scenario, covariance, covariance_simulated, covariance_stratified, scenario_from_or_maf,
    weighted_correlation_closed_form, zeta, Cohort, EffectScenario, MethodId, Statistic, StratifiedDesign,
    Stratum, StratumWeights, StudyDesign, WeightTable, WeightedStudy,
};

fn det_a_closed(d: &StudyDesign) -> f64 {
    let (n0, n1, n0p, n1p) = (d.n0 as f64, d.n1 as f64, d.n0p as f64, d.n1p as f64);
    (n0 * n1p - n0p * n1).powi(2) / ((n0 + n0p) * (n1 + n1p) * (n0 + n1) * (n0p + n1p))
}

fn det_b_closed(d: &StudyDesign) -> f64 {
    let (n0, n1, n0p, n1p) = (d.n0 as f64, d.n1 as f64, d.n0p as f64, d.n1p as f64);
    n0p * n1 * n1 / ((n0 + n1) * (n0 + n0p + n1p) * (n1 + n1p))
}

/// The five expected z-scores written out one by one, with the pooled
/// frequency of the two compared groups in each denominator.
fn zeta_by_hand(d: &StudyDesign, s: &EffectScenario) -> [f64; 5] {
    let (n0, n1, n0p, n1p) = (d.n0 as f64, d.n1 as f64, d.n0p as f64, d.n1p as f64);
    let ctrl = (s.mu0 * n0 + s.mu0p * n0p) / (n0 + n0p);
    let case = (s.mu1 * n1 + s.mu1p * n1p) / (n1 + n1p);
    let sd = |m: f64| (m * (1.0 - m)).sqrt();
    let bar = |a: f64, na: f64, b: f64, nb: f64| (a * na + b * nb) / (na + nb);
    let zd = (2.0 * n0 * n1 / (n0 + n1)).sqrt() * (s.mu1 - s.mu0) / sd(bar(s.mu0, n0, s.mu1, n1));
    let zr = (2.0 * n0p * n1p / (n0p + n1p)).sqrt() * (s.mu1p - s.mu0p) / sd(bar(s.mu0p, n0p, s.mu1p, n1p));
    let zs = (2.0 * (n0 + n0p) * n1p / (n0 + n0p + n1p)).sqrt() * (s.mu1p - ctrl)
        / sd(bar(ctrl, n0 + n0p, s.mu1p, n1p));
    let zc = (2.0 * (n0 + n0p) * n1 / (n0 + n0p + n1)).sqrt() * (s.mu1 - ctrl)
        / sd(bar(ctrl, n0 + n0p, s.mu1, n1));
    let zm = (2.0 * (n0 + n0p) * (n1 + n1p) / (n0 + n0p + n1 + n1p)).sqrt() * (case - ctrl)
        / sd(bar(ctrl, n0 + n0p, case, n1 + n1p));
    [zd, zr, zs, zc, zm]
}

#[test]
fn zeta_matches_hand_evaluation() {
    let d = StudyDesign::new(15000, 5000, 5000, 5000);
    for (or, maf, k0, k1) in [(1.3, 0.1, 0.0, 0.0), (1.2, 0.3, 0.0, 0.1), (0.8, 0.05, 0.2, 0.0)] {
        let s = scenario_from_or_maf(or, maf, k0, k1).unwrap();
        let z = zeta(&d, &s).unwrap();
        let want = zeta_by_hand(&d, &s);
        for (stat, w) in Statistic::ALL.iter().zip(want) {
            let got = z.get(*stat).unwrap();
            assert!((got - w).abs() <= 1e-12 * w.abs().max(1.0), "{stat:?}: {got} vs {w}");
        }
    }
}

#[test]
fn zeta_matches_published_scale() {
    // Discovery z at OR 1.3, MAF 0.1 with 15000 controls and 5000 cases.
    let d = StudyDesign::new(15000, 5000, 5000, 5000);
    let s = scenario_from_or_maf(1.3, 0.1, 0.0, 0.0).unwrap();
    let z = zeta(&d, &s).unwrap();
    let pooled = (15000.0 * s.mu0 + 5000.0 * s.mu1) / 20000.0;
    let want = (2.0f64 * 15000.0 * 5000.0 / 20000.0).sqrt() * (s.mu1 - s.mu0) / (pooled * (1.0 - pooled)).sqrt();
    assert!((z.zeta_d.unwrap() - want).abs() < 1e-12);
    assert!(z.zeta_d.unwrap() > 6.9 && z.zeta_d.unwrap() < 7.1);
}

/// Solve the odds-ratio condition on mu0 by bisection.
fn or_maf_bisect(or: f64, maf: f64) -> (f64, f64) {
    let f = |m0: f64| {
        let m1 = 2.0 * maf - m0;
        (m1 * (1.0 - m0)).ln() - (m0 * (1.0 - m1)).ln() - or.ln()
    };
    let (mut lo, mut hi) = ((2.0 * maf - 1.0).max(0.0) + 1e-300, (2.0 * maf).min(1.0) - 1e-16);
    // f is decreasing in mu0.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m0 = 0.5 * (lo + hi);
    (m0, 2.0 * maf - m0)
}

#[test]
fn or_maf_matches_bisection() {
    for &or in &[0.25, 0.9, 1.0 + 1e-9, 1.1, 1.3, 2.0, 7.5] {
        for &maf in &[0.01, 0.1, 0.3, 0.5, 0.72] {
            let s = scenario_from_or_maf(or, maf, 0.0, 0.0).unwrap();
            let (m0, m1) = or_maf_bisect(or, maf);
            assert!((s.mu0 - m0).abs() < 1e-12, "or={or} maf={maf}: {} vs {m0}", s.mu0);
            assert!((s.mu1 - m1).abs() < 1e-12);
            assert_eq!(s.mu0p, s.mu0);
            assert_eq!(s.mu1p, s.mu1);
        }
    }
}

#[test]
fn determinants_match_closed_forms() {
    let designs = [(15000, 5000, 5000, 5000), (1000, 800, 3000, 1200), (3, 7, 11, 5), (2, 1, 4, 2), (50, 50, 50, 50)];
    for (a, b, c, e) in designs {
        let d = StudyDesign::new(a, b, c, e);
        let cov = covariance(&d).unwrap();
        let da = cov.sigma_a.unwrap().det();
        let db = cov.sigma_b.unwrap().det();
        assert!((da - det_a_closed(&d)).abs() < 1e-12, "{d:?}: {da} vs {}", det_a_closed(&d));
        assert!((db - det_b_closed(&d)).abs() < 1e-12, "{d:?}: {db} vs {}", det_b_closed(&d));
    }
}

#[test]
fn proportional_design_makes_sigma_a_singular() {
    let cov = covariance(&StudyDesign::new(2, 1, 4, 2)).unwrap();
    assert!(cov.sigma_a.unwrap().det().abs() < 1e-15);
    assert_eq!(cov.is_singular(MethodId::A), Some(true));
}

#[test]
fn sigma_b_singular_without_replication_controls() {
    let cov = covariance(&StudyDesign::new(1000, 500, 0, 700)).unwrap();
    assert!(cov.sigma_a.is_none());
    assert!(cov.sigma_b.unwrap().det().abs() < 1e-15);
    let cov = covariance(&StudyDesign::new(1000, 500, 10, 700)).unwrap();
    assert!(cov.sigma_b.unwrap().det() > 1e-4);
}

#[test]
fn one_stratum_reduces_to_flat_design() {
    let d = StudyDesign::new(1200, 700, 900, 400);
    let cov = covariance(&d).unwrap();
    let cases = [
        (Statistic::D, Statistic::M, (d.n0, d.n1, d.n0 + d.n0p, d.n1 + d.n1p, d.n0, d.n1)),
        (Statistic::D, Statistic::S, (d.n0, d.n1, d.n0 + d.n0p, d.n1p, d.n0, 0)),
        (Statistic::R, Statistic::S, (d.n0p, d.n1p, d.n0 + d.n0p, d.n1p, d.n0p, d.n1p)),
        (Statistic::C, Statistic::S, (d.n0 + d.n0p, d.n1, d.n0 + d.n0p, d.n1p, d.n0 + d.n0p, 0)),
    ];
    for (x, y, (n0_i, n1_i, n0_j, n1_j, n0_shared, n1_shared)) in cases {
        let sd = StratifiedDesign { strata: vec![Stratum { n0_i, n1_i, n0_j, n1_j, n0_shared, n1_shared }] };
        let got = covariance_stratified(&sd, StratumWeights::Cmh).unwrap();
        let want = cov.rho(x, y).unwrap();
        assert!((got - want).abs() < 1e-12, "{x:?},{y:?}: {got} vs {want}");
    }
}

#[test]
fn disjoint_strata_are_uncorrelated() {
    let sd = StratifiedDesign {
        strata: vec![
            Stratum { n0_i: 500, n1_i: 200, n0_j: 300, n1_j: 100, n0_shared: 0, n1_shared: 0 },
            Stratum { n0_i: 50, n1_i: 20, n0_j: 30, n1_j: 900, n0_shared: 0, n1_shared: 0 },
        ],
    };
    assert_eq!(covariance_stratified(&sd, StratumWeights::Cmh).unwrap(), 0.0);
}

fn flat_study(controls: &[std::ops::Range<u64>], cases: &[std::ops::Range<u64>]) -> WeightedStudy {
    let expand = |rs: &[std::ops::Range<u64>]| rs.iter().flat_map(|r| r.clone().map(|k| (k, 1.0))).collect();
    WeightedStudy { controls: expand(controls), cases: expand(cases) }
}

#[test]
fn uniform_weights_reproduce_flat_correlation() {
    // Ids: C0 = 0..200, C1 = 200..350, C0' = 350..650, C1' = 650..900.
    let d = StudyDesign::new(200, 150, 300, 250);
    let (c0, c1, c0p, c1p) = (0..200, 200..350, 350..650, 650..900);
    let t = WeightTable {
        study_i: flat_study(&[c0.clone()], &[c1.clone()]),
        study_j: flat_study(&[c0, c0p], &[c1, c1p]),
    };
    let want = covariance(&d).unwrap().rho(Statistic::D, Statistic::M).unwrap();
    let closed = weighted_correlation_closed_form(&t).unwrap();
    assert!((closed - want).abs() < 1e-12);
    let sim = covariance_simulated(&t, 0.2, 100_000, 2024).unwrap();
    assert!((sim.correlation - want).abs() < 3.0 * sim.std_error, "{sim:?} vs {want}");
}

#[test]
fn disjoint_samples_simulate_to_zero() {
    let t = WeightTable {
        study_i: flat_study(&[0..300], &[300..500]),
        study_j: flat_study(&[500..700], &[700..1000]),
    };
    assert_eq!(weighted_correlation_closed_form(&t).unwrap(), 0.0);
    let sim = covariance_simulated(&t, 0.35, 100_000, 5).unwrap();
    assert!(sim.correlation.abs() < 3.0 * sim.std_error, "{sim:?}");
}

#[test]
fn weighted_closed_form_matches_simulation() {
    // Unequal weights, shared controls and a sample that is a case in one
    // study and a control in the other.
    let w = |k: u64| 0.5 + (k % 7) as f64 * 0.25;
    let t = WeightTable {
        study_i: WeightedStudy {
            controls: (0..400).map(|k| (k, w(k))).collect(),
            cases: (400..600).map(|k| (k, w(k + 3))).collect(),
        },
        study_j: WeightedStudy {
            controls: (100..500).filter(|k| !(400..420).contains(k)).map(|k| (k, w(k + 1))).collect(),
            cases: (400..420).chain(600..800).map(|k| (k, w(k + 5))).collect(),
        },
    };
    let sim = covariance_simulated(&t, 0.25, 100_000, 77).unwrap();
    assert!(sim.closed_form > 0.1);
    assert!((sim.correlation - sim.closed_form).abs() < 3.0 * sim.std_error, "{sim:?}");
}

fn arb_design() -> impl Strategy<Value = StudyDesign> {
    (1u64..20_000, 1u64..20_000, 1u64..20_000, 1u64..20_000).prop_map(|(a, b, c, d)| StudyDesign::new(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn correlations_are_scale_invariant(d in arb_design(), k in 2u64..50) {
        let a = covariance(&d).unwrap();
        let b = covariance(&d.scaled(k)).unwrap();
        for x in Statistic::ALL {
            for y in Statistic::ALL {
                prop_assert!((a.rho(x, y).unwrap() - b.rho(x, y).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zeta_scales_with_root_of_size(d in arb_design(), k in 2u64..50, or in 1.05f64..2.0, maf in 0.02f64..0.5) {
        let s = scenario_from_or_maf(or, maf, 0.0, 0.0).unwrap();
        let a = zeta(&d, &s).unwrap();
        let b = zeta(&d.scaled(k), &s).unwrap();
        for x in Statistic::ALL {
            let (za, zb) = (a.get(x).unwrap(), b.get(x).unwrap());
            prop_assert!((zb - (k as f64).sqrt() * za).abs() < 1e-9 * zb.abs().max(1.0));
        }
    }

    #[test]
    fn swapping_case_and_control_flips_every_sign(d in arb_design(),
        m in proptest::array::uniform4(0.01f64..0.99)) {
        let s = EffectScenario { mu0: m[0], mu1: m[1], mu0p: m[2], mu1p: m[3] };
        let a = zeta(&d, &s).unwrap();
        let b = zeta(&d, &s.swapped()).unwrap();
        for x in [Statistic::D, Statistic::R] {
            let (za, zb) = (a.get(x).unwrap(), b.get(x).unwrap());
            prop_assert!(za == 0.0 || za.signum() != zb.signum(), "{x:?}: {za} {zb}");
        }
        // With the group sizes swapped as well the pooled frequencies match,
        // so the negation is exact.
        let ds = StudyDesign::new(d.n1, d.n0, d.n1p, d.n0p);
        let c = zeta(&ds, &s.swapped()).unwrap();
        for x in [Statistic::D, Statistic::R, Statistic::M] {
            let (za, zc) = (a.get(x).unwrap(), c.get(x).unwrap());
            prop_assert!((za + zc).abs() < 1e-9 * za.abs().max(1.0));
        }
    }

    #[test]
    fn true_association_flips_every_component(d in arb_design(), or in 1.01f64..3.0, maf in 0.02f64..0.5) {
        let s = scenario_from_or_maf(or, maf, 0.0, 0.0).unwrap();
        let a = zeta(&d, &s).unwrap();
        let b = zeta(&d, &s.swapped()).unwrap();
        for x in Statistic::ALL {
            let (za, zb) = (a.get(x).unwrap(), b.get(x).unwrap());
            prop_assert!(za > 0.0 && zb < 0.0);
        }
    }

    #[test]
    fn shared_controls_dilute_replication_aberrance(d in arb_design(), shift in -0.05f64..0.05, maf in 0.05f64..0.5) {
        prop_assume!(shift.abs() > 1e-4);
        let base = EffectScenario::null(maf);
        let s = aberrant_scenario(&base, Cohort::C0p, maf + shift);
        let z = zeta(&d, &s).unwrap();
        prop_assert!(z.zeta_s.unwrap().abs() < z.zeta_r.unwrap().abs());
    }

    #[test]
    fn sigma_c_is_singular(d in arb_design()) {
        prop_assert!(covariance(&d).unwrap().sigma_c.unwrap().det().abs() < 1e-10);
    }
}
