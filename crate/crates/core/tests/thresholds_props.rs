use proptest::prelude::*;
use repshare_core::design::{covariance, Statistic, StudyDesign};
use repshare_core::mvn::{norm_sf, CorrMatrix3};
use repshare_core::thresholds::{
    beta_star_asymptotic, beta_star_for_rho, p_joint, p_joint_z, solve_beta_star, solve_mid_cutoff, Mode, Thresholds,
};

const GWAS: Thresholds = Thresholds::new(5e-6, 5e-4, 5e-8);

#[test]
fn independent_replication_keeps_beta() {
    let t = Thresholds::new(5e-6, 5e-4, 1.0);
    let a = CorrMatrix3::new(0.0, 0.4, 0.5).unwrap();
    let (za, zb, zg) = (t.z_alpha().unwrap(), t.z_beta().unwrap(), t.z_gamma().unwrap());
    let p0 = p_joint_z(&a, [za, zb, zg]).unwrap();
    let (z, _) = solve_mid_cutoff(&a, za, zb, zg, p0).unwrap();
    assert!((z - zb).abs() < 1e-10);
}

#[test]
fn independent_pair_is_half_alpha_beta() {
    // Two same-direction tails: 2 (α/2)(β/2).
    let t = Thresholds::new(0.05, 0.05, 1.0);
    let p = p_joint(&CorrMatrix3::independent(), &t, None).unwrap();
    assert!((p - 0.05 * 0.05 / 2.0).abs() < 1e-16);
}

#[test]
fn solved_cutoff_sits_above_the_asymptote_and_close_to_it() {
    for &rho in &[0.2, 0.5, 0.8] {
        let t = Thresholds::new(1e-12, 5e-4, 1.0);
        let (z, _) = beta_star_for_rho(rho, &t).unwrap();
        let a = beta_star_asymptotic(rho, &t).unwrap();
        assert!(z > a);
        // Leading correction is about rho / z_alpha relative.
        assert!(z / a - 1.0 < 1.5 * rho / t.z_alpha().unwrap(), "rho={rho}: {}", z / a);
    }
}

#[test]
fn gamma1_p0_has_closed_form() {
    // Without the combined cutoff, A's statistics are independent.
    let d = StudyDesign::new(8000, 3000, 4000, 2500);
    let t = Thresholds::new(1e-5, 1e-3, 5e-8);
    let dt = solve_beta_star(&d, &covariance(&d).unwrap(), &t, Mode::Gamma1).unwrap();
    let want = 2.0 * norm_sf(t.z_alpha().unwrap()).unwrap() * norm_sf(t.z_beta().unwrap()).unwrap();
    assert!((dt.p0 / want - 1.0).abs() < 1e-10);
}

fn arb_design() -> impl Strategy<Value = StudyDesign> {
    (100u64..50_000, 100u64..50_000, 100u64..50_000, 100u64..50_000)
        .prop_map(|(a, b, c, d)| StudyDesign::new(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn residual_is_monotone_in_the_cutoff(d in arb_design(), z in 2.0f64..6.0, dz in 0.01f64..1.0) {
        let cov = covariance(&d).unwrap();
        let t = GWAS;
        let (za, zg) = (t.z_alpha().unwrap(), t.z_gamma().unwrap());
        for s in [cov.sigma_b.unwrap(), cov.sigma_c.unwrap()] {
            let p1 = p_joint_z(&s, [za, z, zg]).unwrap();
            let p2 = p_joint_z(&s, [za, z + dz, zg]).unwrap();
            prop_assert!(p2 <= p1);
        }
    }

    #[test]
    fn conservation_and_ordering(d in arb_design(), gamma1 in any::<bool>()) {
        let mode = if gamma1 { Mode::Gamma1 } else { Mode::General };
        let cov = covariance(&d).unwrap();
        let dt = solve_beta_star(&d, &cov, &GWAS, mode).unwrap();
        let te = GWAS.effective(mode);
        let pb = p_joint(cov.sigma_b.as_ref().unwrap(), &te, Some(dt.beta_star)).unwrap();
        let pc = p_joint(cov.sigma_c.as_ref().unwrap(), &te, Some(dt.beta_perp)).unwrap();
        prop_assert!((pb - dt.p0).abs() <= 1e-12);
        prop_assert!((pc - dt.p0).abs() <= 1e-12);
        prop_assert!(dt.beta_perp < dt.beta_star && dt.beta_star < GWAS.beta, "{dt:?}");
    }

    #[test]
    fn cutoff_exceeds_lower_bound_without_combined_threshold(d in arb_design()) {
        let cov = covariance(&d).unwrap();
        let dt = solve_beta_star(&d, &cov, &GWAS, Mode::Gamma1).unwrap();
        let rho = cov.rho(Statistic::D, Statistic::S).unwrap();
        let zb = GWAS.z_beta().unwrap();
        let bound = zb.max(beta_star_asymptotic(rho, &GWAS).unwrap());
        prop_assert!(dt.z_beta_star > bound);
    }
}
